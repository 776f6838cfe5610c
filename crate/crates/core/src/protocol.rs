//! JSON frames exchanged between clients and the game server.
//!
//! Every frame is one JSON object tagged by its `"type"` field.

use serde::{Deserialize, Serialize};

use crate::game::{Board, Point, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Join { room: String, name: String },
    Chat { text: String },
    Move { object: String, x: i64, y: i64 },
    Ready,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementEntry {
    pub object: String,
    pub x: i64,
    pub y: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Overlap,
    OutOfBounds,
}

impl RejectReason {
    pub fn from_verdict(v: Verdict) -> Option<Self> {
        match v {
            Verdict::Ok => None,
            Verdict::Overlap => Some(Self::Overlap),
            Verdict::OutOfBounds => Some(Self::OutOfBounds),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Joined {
        player_id: String,
    },
    RoundStart {
        round: u8,
        scene: String,
        placements: Vec<PlacementEntry>,
    },
    Chat {
        from: String,
        text: String,
        ts: i64,
    },
    MoveOk {
        object: String,
        x: i64,
        y: i64,
    },
    MoveRejected {
        object: String,
        reason: RejectReason,
    },
    RoundEnd {
        round: u8,
        score: f64,
        bonus: bool,
    },
    GameEnd {
        scores: Vec<f64>,
    },
    Error {
        code: String,
        message: String,
    },
}

pub fn placements_to_wire(board: &Board) -> Vec<PlacementEntry> {
    board
        .iter()
        .map(|(object, p)| PlacementEntry {
            object: object.to_string(),
            x: p.x,
            y: p.y,
        })
        .collect()
}

pub fn placements_from_wire(entries: &[PlacementEntry]) -> Board {
    let mut board = Board::default();
    for e in entries {
        board.set(&e.object, Point::new(e.x, e.y));
    }
    board
}
