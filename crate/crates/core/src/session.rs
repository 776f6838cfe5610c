//! Room lifecycle: two players, two rounds, private boards, shared chat.
//!
//! A [`Room`] turns each inbound [`Command`] into a list of [`Event`]s and
//! mutates its [`GameState`] only through [`Room::apply`]. Replaying a log
//! drives the same `apply`, so a live room and its replay cannot diverge.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventlog::LogRecord;
use crate::game::{
    random_initial_placements, score_boards, validate_placement, Board, GameError, Point, Scene, SceneCatalog,
    SceneError, Score,
};
use crate::protocol::{placements_to_wire, ClientMessage, RejectReason, ServerMessage};

pub const ROUNDS: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Waiting,
    Playing,
    RoundDone,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerSlot {
    pub player_id: String,
    pub display_name: String,
    pub connected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub sender: String,
    pub text: String,
    pub timestamp_ms: i64,
    pub round: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub room_id: String,
    pub players: Vec<PlayerSlot>,
    pub round_index: u8,
    pub scene: Scene,
    pub boards: BTreeMap<String, Board>,
    pub chat: Vec<ChatMessage>,
    pub phase: Phase,
    pub ready_flags: BTreeMap<String, bool>,
    pub scores: Vec<Score>,
}

impl GameState {
    pub fn new(room_id: impl Into<String>, first_scene: Scene) -> Self {
        Self {
            room_id: room_id.into(),
            players: Vec::new(),
            round_index: 1,
            scene: first_scene,
            boards: BTreeMap::new(),
            chat: Vec::new(),
            phase: Phase::Waiting,
            ready_flags: BTreeMap::new(),
            scores: Vec::new(),
        }
    }

    pub fn player(&self, id: &str) -> Option<&PlayerSlot> {
        self.players.iter().find(|p| p.player_id == id)
    }

    pub fn partner_of(&self, id: &str) -> Option<&str> {
        self.players.iter().map(|p| p.player_id.as_str()).find(|p| *p != id)
    }
}

/// Who caused an event: a seated player or the server itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Actor {
    Server,
    Player(String),
}

impl Actor {
    pub const SERVER: &'static str = "server";

    pub fn as_str(&self) -> &str {
        match self {
            Actor::Server => Self::SERVER,
            Actor::Player(id) => id,
        }
    }

    pub fn parse(s: &str) -> Self {
        if s == Self::SERVER {
            Actor::Server
        } else {
            Actor::Player(s.to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Join { room: String, name: String },
    RoundStart { round: u8, scene: String, board: Board },
    Chat { text: String },
    MoveOk { object: String, to: Point },
    MoveRejected { object: String, reason: RejectReason },
    Ready,
    RoundEnd { round: u8 },
    GameEnd,
    Leave,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub ts_ms: i64,
    pub actor: Actor,
    pub kind: EventKind,
}

/// Inbound request from a connection, after the transport identified the player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Join { name: String },
    Chat { player: String, text: String },
    Move { player: String, object: String, to: Point },
    Ready { player: String },
    Leave { player: String },
}

impl Command {
    /// Maps a frame from an already-joined player. `join` frames are handled
    /// by the transport, which has no player id yet.
    pub fn from_client(player: &str, msg: ClientMessage) -> Option<Self> {
        let player = player.to_string();
        Some(match msg {
            ClientMessage::Join { .. } => return None,
            ClientMessage::Chat { text } => Command::Chat { player, text },
            ClientMessage::Move { object, x, y } => Command::Move {
                player,
                object,
                to: Point::new(x, y),
            },
            ClientMessage::Ready => Command::Ready { player },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outbound {
    pub to: String,
    pub msg: ServerMessage,
}

/// Everything one command produced: frames to deliver and records to persist.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Step {
    pub outbound: Vec<Outbound>,
    pub records: Vec<LogRecord>,
}

impl Step {
    pub fn for_player<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a ServerMessage> + 'a {
        self.outbound.iter().filter(move |o| o.to == id).map(|o| &o.msg)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SessionError {
    #[error("room is full")]
    RoomFull,
    #[error("not allowed while the room is {0:?}")]
    WrongPhase(Phase),
    #[error("chat text is empty")]
    EmptyText,
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("unknown player {0}")]
    UnknownPlayer(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

impl SessionError {
    /// Short machine-readable code for `error` frames.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::RoomFull => "room_full",
            SessionError::WrongPhase(_) => "wrong_phase",
            SessionError::EmptyText => "empty_text",
            SessionError::UnknownObject(_) => "unknown_object",
            SessionError::UnknownPlayer(_) => "unknown_player",
            SessionError::Game(_) | SessionError::Scene(_) => "internal",
        }
    }

    pub fn to_frame(&self) -> ServerMessage {
        ServerMessage::Error {
            code: self.code().to_string(),
            message: self.to_string(),
        }
    }
}

/// SplitMix64 finaliser; mixes seed material into an independent stream seed.
pub fn derive_seed(root: u64, parts: &[u64]) -> u64 {
    let mut z = root;
    for &p in parts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// FNV-1a, stable across platforms and releases.
pub fn room_seed(root: u64, room_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in room_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    derive_seed(root, &[h])
}

/// A single room's serialized state machine.
#[derive(Debug, Clone)]
pub struct Room {
    state: GameState,
    catalog: Arc<SceneCatalog>,
    seed: u64,
    next_seq: u64,
}

impl Room {
    pub fn new(room_id: impl Into<String>, seed: u64, catalog: Arc<SceneCatalog>) -> Result<Self, SessionError> {
        let first = catalog.for_round(1)?.clone();
        Ok(Self {
            state: GameState::new(room_id, first),
            catalog,
            seed,
            next_seq: 1,
        })
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn id(&self) -> &str {
        &self.state.room_id
    }

    pub fn catalog(&self) -> &SceneCatalog {
        &self.catalog
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub(crate) fn set_next_seq(&mut self, seq: u64) {
        self.next_seq = seq;
    }

    /// Assigns the joining player's id as part of the step.
    pub fn join(&mut self, name: &str, now_ms: i64) -> Result<(String, Step), SessionError> {
        let step = self.handle(Command::Join { name: name.to_string() }, now_ms)?;
        let id = step
            .outbound
            .iter()
            .find_map(|o| match &o.msg {
                ServerMessage::Joined { player_id } => Some(player_id.clone()),
                _ => None,
            })
            .expect("join step always emits joined");
        Ok((id, step))
    }

    pub fn handle(&mut self, command: Command, now_ms: i64) -> Result<Step, SessionError> {
        let events = self.decide(command, now_ms)?;
        let mut step = Step::default();
        for event in events {
            self.apply(&event)?;
            let record = LogRecord::from_event(self.next_seq, self.id(), &event, &self.state);
            self.next_seq += 1;
            step.outbound.extend(self.route(&event));
            step.records.push(record);
        }
        Ok(step)
    }

    fn require_player(&self, id: &str) -> Result<(), SessionError> {
        self.state
            .player(id)
            .map(|_| ())
            .ok_or_else(|| SessionError::UnknownPlayer(id.to_string()))
    }

    fn require_playing(&self) -> Result<(), SessionError> {
        match self.state.phase {
            Phase::Playing => Ok(()),
            other => Err(SessionError::WrongPhase(other)),
        }
    }

    fn decide(&self, command: Command, ts_ms: i64) -> Result<Vec<Event>, SessionError> {
        let ev = |actor: Actor, kind| Event { ts_ms, actor, kind };
        let state = &self.state;
        match command {
            Command::Join { name } => {
                if state.phase == Phase::Finished {
                    return Err(SessionError::WrongPhase(Phase::Finished));
                }
                if state.phase != Phase::Waiting || state.players.len() >= 2 {
                    return Err(SessionError::RoomFull);
                }
                let id = ["p1", "p2"]
                    .into_iter()
                    .find(|id| state.player(id).is_none())
                    .expect("fewer than two players seated")
                    .to_string();
                let mut events = vec![ev(
                    Actor::Player(id.clone()),
                    EventKind::Join {
                        room: state.room_id.clone(),
                        name,
                    },
                )];
                if state.players.len() == 1 {
                    let mut seated: Vec<String> = state.players.iter().map(|p| p.player_id.clone()).collect();
                    seated.push(id);
                    seated.sort();
                    events.extend(self.round_start_events(1, &seated, ts_ms)?);
                }
                Ok(events)
            }
            Command::Chat { player, text } => {
                self.require_player(&player)?;
                self.require_playing()?;
                if text.trim().is_empty() {
                    return Err(SessionError::EmptyText);
                }
                Ok(vec![ev(Actor::Player(player), EventKind::Chat { text })])
            }
            Command::Move { player, object, to } => {
                self.require_player(&player)?;
                self.require_playing()?;
                if !state.scene.has_object(&object) {
                    return Err(SessionError::UnknownObject(object));
                }
                let board = state
                    .boards
                    .get(&player)
                    .ok_or_else(|| SessionError::UnknownPlayer(player.clone()))?;
                let verdict = validate_placement(&state.scene, board, &object, to)?;
                let kind = match RejectReason::from_verdict(verdict) {
                    None => EventKind::MoveOk { object, to },
                    Some(reason) => EventKind::MoveRejected { object, reason },
                };
                Ok(vec![ev(Actor::Player(player), kind)])
            }
            Command::Ready { player } => {
                self.require_player(&player)?;
                self.require_playing()?;
                if state.ready_flags.get(&player).copied().unwrap_or(false) {
                    return Ok(Vec::new());
                }
                let mut events = vec![ev(Actor::Player(player.clone()), EventKind::Ready)];
                let all_ready = state.players.len() == 2
                    && state
                        .players
                        .iter()
                        .all(|p| p.player_id == player || state.ready_flags.get(&p.player_id).copied().unwrap_or(false));
                if all_ready {
                    let round = state.round_index;
                    events.push(ev(Actor::Server, EventKind::RoundEnd { round }));
                    if round < ROUNDS {
                        let ids: Vec<String> = state.players.iter().map(|p| p.player_id.clone()).collect();
                        events.extend(self.round_start_events(round + 1, &ids, ts_ms)?);
                    } else {
                        events.push(ev(Actor::Server, EventKind::GameEnd));
                    }
                }
                Ok(events)
            }
            Command::Leave { player } => {
                self.require_player(&player)?;
                let mut events = vec![ev(Actor::Player(player), EventKind::Leave)];
                if matches!(state.phase, Phase::Playing | Phase::RoundDone) {
                    events.push(ev(Actor::Server, EventKind::GameEnd));
                }
                Ok(events)
            }
        }
    }

    fn round_start_events(&self, round: u8, players: &[String], ts_ms: i64) -> Result<Vec<Event>, SessionError> {
        let scene = self.catalog.for_round(round)?;
        players
            .iter()
            .enumerate()
            .map(|(i, id)| {
                let seed = derive_seed(self.seed, &[u64::from(round), i as u64]);
                let board = random_initial_placements(scene, seed)?;
                Ok(Event {
                    ts_ms,
                    actor: Actor::Player(id.clone()),
                    kind: EventKind::RoundStart {
                        round,
                        scene: scene.id().to_string(),
                        board,
                    },
                })
            })
            .collect()
    }

    /// The only place the game state changes.
    pub fn apply(&mut self, event: &Event) -> Result<(), SessionError> {
        let state = &mut self.state;
        let player = match &event.actor {
            Actor::Player(id) => Some(id.clone()),
            Actor::Server => None,
        };
        let need_player = || player.clone().ok_or_else(|| SessionError::UnknownPlayer(Actor::SERVER.into()));
        match &event.kind {
            EventKind::Join { name, .. } => {
                let id = need_player()?;
                state.players.push(PlayerSlot {
                    player_id: id.clone(),
                    display_name: name.clone(),
                    connected: true,
                });
                state.ready_flags.insert(id, false);
            }
            EventKind::RoundStart { round, scene, board } => {
                let id = need_player()?;
                if state.scene.id() != scene {
                    state.scene = self.catalog.get(scene)?.clone();
                }
                state.round_index = *round;
                state.boards.insert(id, board.clone());
                state.phase = Phase::Playing;
                state.ready_flags.values_mut().for_each(|f| *f = false);
            }
            EventKind::Chat { text } => {
                let id = need_player()?;
                state.chat.push(ChatMessage {
                    sender: id,
                    text: text.clone(),
                    timestamp_ms: event.ts_ms,
                    round: state.round_index,
                });
            }
            EventKind::MoveOk { object, to } => {
                let id = need_player()?;
                state
                    .boards
                    .get_mut(&id)
                    .ok_or(SessionError::UnknownPlayer(id))?
                    .set(object, *to);
            }
            EventKind::MoveRejected { .. } => {}
            EventKind::Ready => {
                state.ready_flags.insert(need_player()?, true);
            }
            EventKind::RoundEnd { .. } => {
                let mut boards = state.players.iter().filter_map(|p| state.boards.get(&p.player_id));
                let (a, b) = match (boards.next(), boards.next()) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(SessionError::WrongPhase(state.phase)),
                };
                let score = score_boards(a, b, &state.scene)?;
                state.scores.push(score);
                state.phase = Phase::RoundDone;
            }
            EventKind::GameEnd => state.phase = Phase::Finished,
            EventKind::Leave => {
                let id = need_player()?;
                if state.phase == Phase::Waiting {
                    state.players.retain(|p| p.player_id != id);
                    state.ready_flags.remove(&id);
                } else if let Some(slot) = state.players.iter_mut().find(|p| p.player_id == id) {
                    slot.connected = false;
                }
            }
        }
        Ok(())
    }

    /// Wire frame describing an already-applied event, as seen by its audience.
    pub fn frame_for(event: &Event, state: &GameState) -> Option<ServerMessage> {
        let actor = event.actor.as_str().to_string();
        Some(match &event.kind {
            EventKind::Join { .. } => ServerMessage::Joined { player_id: actor },
            EventKind::RoundStart { round, scene, board } => ServerMessage::RoundStart {
                round: *round,
                scene: scene.clone(),
                placements: placements_to_wire(board),
            },
            EventKind::Chat { text } => ServerMessage::Chat {
                from: actor,
                text: text.clone(),
                ts: event.ts_ms,
            },
            EventKind::MoveOk { object, to } => ServerMessage::MoveOk {
                object: object.clone(),
                x: to.x,
                y: to.y,
            },
            EventKind::MoveRejected { object, reason } => ServerMessage::MoveRejected {
                object: object.clone(),
                reason: *reason,
            },
            EventKind::RoundEnd { round } => {
                let score = state.scores.get(usize::from(*round).saturating_sub(1))?;
                ServerMessage::RoundEnd {
                    round: *round,
                    score: score.as_f64(),
                    bonus: score.bonus(),
                }
            }
            EventKind::GameEnd => ServerMessage::GameEnd {
                scores: state.scores.iter().map(Score::as_f64).collect(),
            },
            EventKind::Ready | EventKind::Leave => return None,
        })
    }

    fn route(&self, event: &Event) -> Vec<Outbound> {
        let Some(msg) = Self::frame_for(event, &self.state) else {
            return Vec::new();
        };
        let private = matches!(
            event.kind,
            EventKind::Join { .. } | EventKind::RoundStart { .. } | EventKind::MoveOk { .. } | EventKind::MoveRejected { .. }
        );
        if private {
            return vec![Outbound {
                to: event.actor.as_str().to_string(),
                msg,
            }];
        }
        self.state
            .players
            .iter()
            .filter(|p| p.connected)
            .map(|p| Outbound {
                to: p.player_id.clone(),
                msg: msg.clone(),
            })
            .collect()
    }
}
