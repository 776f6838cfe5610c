//! Two-player collaborative object-placement game: rules, room protocol,
//! event log, dialogue analysis, a rule-based follower agent and a
//! self-play harness.

pub mod agent;
pub mod analysis;
pub mod eventlog;
pub mod game;
pub mod protocol;
pub mod selfplay;
pub mod session;

pub use game::{Board, Point, Rational, Scene, SceneCatalog, Score};
pub use protocol::{ClientMessage, ServerMessage};
pub use session::{GameState, Room};
