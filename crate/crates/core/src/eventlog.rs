//! Append-only room logs: one JSON record per line, one file per room.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::analysis::Transcript;
use crate::game::{Point, SceneCatalog};
use crate::protocol::{placements_from_wire, ClientMessage, ServerMessage};
use crate::session::{Actor, ChatMessage, Event, EventKind, GameState, Room, SessionError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Join,
    Chat,
    MoveOk,
    MoveRejected,
    Ready,
    RoundStart,
    RoundEnd,
    GameEnd,
    Leave,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Join => "join",
            RecordKind::Chat => "chat",
            RecordKind::MoveOk => "move_ok",
            RecordKind::MoveRejected => "move_rejected",
            RecordKind::Ready => "ready",
            RecordKind::RoundStart => "round_start",
            RecordKind::RoundEnd => "round_end",
            RecordKind::GameEnd => "game_end",
            RecordKind::Leave => "leave",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    pub ts_ms: i64,
    pub room_id: String,
    pub actor: String,
    pub kind: RecordKind,
    pub payload: Value,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("sequence gap: expected {expected}, got {got}")]
    SeqGap { expected: u64, got: u64 },
    #[error("record for room {got} appended to log of room {expected}")]
    WrongRoom { expected: String, got: String },
    #[error("malformed record at line {line} (seq {seq:?}): {reason}")]
    Malformed { line: usize, seq: Option<u64>, reason: String },
    #[error("replay failed at seq {seq}: {source}")]
    Replay {
        seq: u64,
        #[source]
        source: SessionError,
    },
    #[error("log storage: {0}")]
    Io(#[from] std::io::Error),
}

impl LogRecord {
    pub fn from_event(seq: u64, room_id: &str, event: &Event, state: &GameState) -> Self {
        let (kind, payload) = match &event.kind {
            EventKind::Join { room, name } => (
                RecordKind::Join,
                to_value(&ClientMessage::Join {
                    room: room.clone(),
                    name: name.clone(),
                }),
            ),
            EventKind::Ready => (RecordKind::Ready, to_value(&ClientMessage::Ready)),
            EventKind::Leave => (RecordKind::Leave, json!({"type": "leave"})),
            other => {
                let frame = Room::frame_for(event, state).expect("server-visible event has a frame");
                let kind = match other {
                    EventKind::RoundStart { .. } => RecordKind::RoundStart,
                    EventKind::Chat { .. } => RecordKind::Chat,
                    EventKind::MoveOk { .. } => RecordKind::MoveOk,
                    EventKind::MoveRejected { .. } => RecordKind::MoveRejected,
                    EventKind::RoundEnd { .. } => RecordKind::RoundEnd,
                    EventKind::GameEnd => RecordKind::GameEnd,
                    EventKind::Join { .. } | EventKind::Ready | EventKind::Leave => unreachable!(),
                };
                (kind, to_value(&frame))
            }
        };
        Self {
            seq,
            ts_ms: event.ts_ms,
            room_id: room_id.to_string(),
            actor: event.actor.as_str().to_string(),
            kind,
            payload,
        }
    }

    /// Rebuilds the event this record was written from.
    pub fn to_event(&self) -> Result<Event, String> {
        let payload_type = self.payload.get("type").and_then(Value::as_str);
        if payload_type != Some(self.kind.as_str()) {
            return Err(format!("kind {} does not match payload type {:?}", self.kind.as_str(), payload_type));
        }
        let kind = match self.kind {
            RecordKind::Join => match client_frame(&self.payload)? {
                ClientMessage::Join { room, name } => EventKind::Join { room, name },
                _ => unreachable!("type checked above"),
            },
            RecordKind::Ready => EventKind::Ready,
            RecordKind::Leave => EventKind::Leave,
            _ => match server_frame(&self.payload)? {
                ServerMessage::RoundStart { round, scene, placements } => EventKind::RoundStart {
                    round,
                    scene,
                    board: placements_from_wire(&placements),
                },
                ServerMessage::Chat { from, text, ts } => {
                    if from != self.actor || ts != self.ts_ms {
                        return Err("chat sender or timestamp disagrees with the record".into());
                    }
                    EventKind::Chat { text }
                }
                ServerMessage::MoveOk { object, x, y } => EventKind::MoveOk {
                    object,
                    to: Point::new(x, y),
                },
                ServerMessage::MoveRejected { object, reason } => EventKind::MoveRejected { object, reason },
                ServerMessage::RoundEnd { round, .. } => EventKind::RoundEnd { round },
                ServerMessage::GameEnd { .. } => EventKind::GameEnd,
                _ => unreachable!("type checked above"),
            },
        };
        Ok(Event {
            ts_ms: self.ts_ms,
            actor: Actor::parse(&self.actor),
            kind,
        })
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log records always serialize")
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("wire frames always serialize")
}

fn client_frame(v: &Value) -> Result<ClientMessage, String> {
    serde_json::from_value(v.clone()).map_err(|e| e.to_string())
}

fn server_frame(v: &Value) -> Result<ServerMessage, String> {
    serde_json::from_value(v.clone()).map_err(|e| e.to_string())
}

pub fn log_path(dir: &Path, room_id: &str) -> PathBuf {
    dir.join(format!("{room_id}.log"))
}

/// Single writer for one room's log file.
#[derive(Debug)]
pub struct LogWriter {
    file: File,
    room_id: String,
    last_seq: u64,
}

impl LogWriter {
    /// Opens (or creates) `<dir>/<room_id>.log`, resuming after its last record.
    pub fn open(dir: &Path, room_id: &str) -> Result<Self, LogError> {
        std::fs::create_dir_all(dir)?;
        let path = log_path(dir, room_id);
        let last_seq = if path.exists() {
            read_log(&path)?.last().map_or(0, |r| r.seq)
        } else {
            0
        };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            file,
            room_id: room_id.to_string(),
            last_seq,
        })
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub fn append(&mut self, record: &LogRecord) -> Result<(), LogError> {
        let expected = self.last_seq + 1;
        if record.seq != expected {
            return Err(LogError::SeqGap {
                expected,
                got: record.seq,
            });
        }
        if record.room_id != self.room_id {
            return Err(LogError::WrongRoom {
                expected: self.room_id.clone(),
                got: record.room_id.clone(),
            });
        }
        let mut line = record.to_line();
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        self.last_seq = record.seq;
        Ok(())
    }

    pub fn append_all<'a>(&mut self, records: impl IntoIterator<Item = &'a LogRecord>) -> Result<(), LogError> {
        records.into_iter().try_for_each(|r| self.append(r))
    }

    /// Forces written records to stable storage.
    pub fn sync(&self) -> Result<(), LogError> {
        self.file.sync_data()?;
        Ok(())
    }
}

/// Parses log text, checking per-line validity and sequence order.
pub fn parse_log(text: &str) -> Result<Vec<LogRecord>, LogError> {
    parse_lines(text.lines().map(|l| Ok(l.to_string())))
}

pub fn read_log(path: &Path) -> Result<Vec<LogRecord>, LogError> {
    let reader = BufReader::new(File::open(path)?);
    parse_lines(reader.lines())
}

fn parse_lines(lines: impl Iterator<Item = std::io::Result<String>>) -> Result<Vec<LogRecord>, LogError> {
    let mut records: Vec<LogRecord> = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let expected = records.last().map_or(1, |r| r.seq + 1);
        let malformed = |reason: String| LogError::Malformed {
            line: i + 1,
            seq: Some(expected),
            reason,
        };
        let record: LogRecord = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        if record.seq != expected {
            return Err(malformed(format!("seq {} out of order", record.seq)));
        }
        record.to_event().map_err(malformed)?;
        records.push(record);
    }
    Ok(records)
}

/// Rebuilds a room's state by applying every record in order.
pub fn replay(room_id: &str, records: &[LogRecord], catalog: Arc<SceneCatalog>) -> Result<GameState, LogError> {
    Ok(replay_room(room_id, records, catalog)?.state().clone())
}

/// Like [`replay`] but returns the live room, ready to accept further commands.
pub fn replay_room(room_id: &str, records: &[LogRecord], catalog: Arc<SceneCatalog>) -> Result<Room, LogError> {
    let mut room = Room::new(room_id, 0, catalog).map_err(|source| LogError::Replay { seq: 0, source })?;
    for (i, record) in records.iter().enumerate() {
        let event = record.to_event().map_err(|reason| LogError::Malformed {
            line: i + 1,
            seq: Some(record.seq),
            reason,
        })?;
        room.apply(&event).map_err(|source| LogError::Replay {
            seq: record.seq,
            source,
        })?;
    }
    room.set_next_seq(records.last().map_or(1, |r| r.seq + 1));
    Ok(room)
}

/// Splits a log's chat into one transcript per started round.
pub fn load_transcripts(records: &[LogRecord]) -> Vec<Transcript> {
    let mut players: Vec<String> = Vec::new();
    let mut transcripts: Vec<Transcript> = Vec::new();
    for record in records {
        let Ok(event) = record.to_event() else { continue };
        match event.kind {
            EventKind::Join { .. } => {
                if !players.contains(&record.actor) {
                    players.push(record.actor.clone());
                }
            }
            EventKind::RoundStart { round, .. } => {
                if transcripts.last().map(|t| t.round) != Some(round) {
                    transcripts.push(Transcript::new(round, players.clone(), Vec::new()));
                }
            }
            EventKind::Chat { text } => {
                if let Some(t) = transcripts.last_mut() {
                    t.messages.push(ChatMessage {
                        sender: record.actor.clone(),
                        text,
                        timestamp_ms: record.ts_ms,
                        round: t.round,
                    });
                }
            }
            _ => {}
        }
    }
    transcripts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::Command;

    fn catalog() -> Arc<SceneCatalog> {
        Arc::new(SceneCatalog::builtin())
    }

    fn short_game() -> (Room, Vec<LogRecord>) {
        let mut room = Room::new("r", 11, catalog()).unwrap();
        let mut log = Vec::new();
        let mut run = |room: &mut Room, cmd, ts| log.extend(room.handle(cmd, ts).unwrap().records);
        run(&mut room, Command::Join { name: "ann".into() }, 1);
        run(&mut room, Command::Join { name: "bob".into() }, 2);
        run(&mut room, Command::Chat { player: "p1".into(), text: "hello".into() }, 3);
        let obj = room.state().scene.objects()[0].clone();
        run(&mut room, Command::Move { player: "p1".into(), object: obj.clone(), to: Point::new(-5, 5) }, 4);
        let spot = (5..=95)
            .flat_map(|y| (5..=95).map(move |x| Point::new(x, y)))
            .find(|p| {
                crate::game::validate_placement(&room.state().scene, &room.state().boards["p1"], &obj, *p)
                    == Ok(crate::game::Verdict::Ok)
            })
            .unwrap();
        run(&mut room, Command::Move { player: "p1".into(), object: obj, to: spot }, 5);
        run(&mut room, Command::Chat { player: "p2".into(), text: "ok".into() }, 6);
        run(&mut room, Command::Ready { player: "p1".into() }, 7);
        run(&mut room, Command::Ready { player: "p2".into() }, 8);
        run(&mut room, Command::Ready { player: "p2".into() }, 9);
        run(&mut room, Command::Ready { player: "p1".into() }, 10);
        (room, log)
    }

    #[test]
    fn record_kinds_match_payload_types() {
        let (_, log) = short_game();
        for r in &log {
            assert_eq!(r.payload["type"], r.kind.as_str());
        }
        assert_eq!(log[0].seq, 1);
        assert!(log.windows(2).all(|w| w[1].seq == w[0].seq + 1));
        assert!(log.iter().any(|r| r.kind == RecordKind::MoveRejected));
    }

    #[test]
    fn writer_rejects_gaps_and_reopens() {
        let dir = tempfile::tempdir().unwrap();
        let (_, log) = short_game();
        let mut w = LogWriter::open(dir.path(), "r").unwrap();
        let err = w.append(&log[1]).unwrap_err();
        assert!(matches!(err, LogError::SeqGap { expected: 1, got: 2 }));
        w.append_all(&log[..3]).unwrap();
        drop(w);
        let mut w = LogWriter::open(dir.path(), "r").unwrap();
        assert_eq!(w.last_seq(), 3);
        w.append_all(&log[3..]).unwrap();
        let back = read_log(&log_path(dir.path(), "r")).unwrap();
        assert_eq!(back, log);

        let mut other = LogWriter::open(dir.path(), "other").unwrap();
        assert!(matches!(other.append(&log[0]), Err(LogError::WrongRoom { .. })));
    }

    #[test]
    fn ten_thousand_records_give_ten_thousand_lines() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = LogWriter::open(dir.path(), "big").unwrap();
        for seq in 1..=10_000u64 {
            w.append(&LogRecord {
                seq,
                ts_ms: seq as i64,
                room_id: "big".into(),
                actor: "p1".into(),
                kind: RecordKind::Ready,
                payload: json!({"type": "ready"}),
            })
            .unwrap();
        }
        w.sync().unwrap();
        let text = std::fs::read_to_string(log_path(dir.path(), "big")).unwrap();
        assert_eq!(text.lines().count(), 10_000);
        assert!(text.lines().all(|l| serde_json::from_str::<Value>(l).is_ok()));
    }

    #[test]
    fn replay_matches_live_state() {
        let (room, log) = short_game();
        let replayed = replay("r", &log, catalog()).unwrap();
        assert_eq!(&replayed, room.state());
    }

    #[test]
    fn replay_of_empty_log_is_waiting_room() {
        let state = replay("fresh", &[], catalog()).unwrap();
        assert_eq!(state, GameState::new("fresh", crate::game::Scene::kitchen()));
    }

    #[test]
    fn truncated_log_replays_to_prefix_state() {
        let (_, log) = short_game();
        let cut = log.iter().position(|r| r.kind == RecordKind::RoundEnd).unwrap();
        let state = replay("r", &log[..=cut], catalog()).unwrap();
        assert_eq!(state.phase, crate::session::Phase::RoundDone);
        assert_eq!(state.scores.len(), 1);
        let state = replay("r", &log[..4], catalog()).unwrap();
        assert_eq!(state.phase, crate::session::Phase::Playing);
        assert_eq!(state.round_index, 1);
    }

    #[test]
    fn replayed_room_in_round_done_rejects_chat() {
        let (_, log) = short_game();
        let cut = log.iter().position(|r| r.kind == RecordKind::RoundEnd).unwrap();
        let mut room = replay_room("r", &log[..=cut], catalog()).unwrap();
        let err = room.handle(Command::Chat { player: "p1".into(), text: "hi".into() }, 99).unwrap_err();
        assert_eq!(err, SessionError::WrongPhase(crate::session::Phase::RoundDone));
    }

    #[test]
    fn malformed_lines_report_position() {
        let (_, log) = short_game();
        let mut text: String = log[..3].iter().map(|r| r.to_line() + "\n").collect();
        text.push_str("{not json}\n");
        match parse_log(&text) {
            Err(LogError::Malformed { line: 4, seq: Some(4), .. }) => {}
            other => panic!("{other:?}"),
        }
        let mut bad = log[0].clone();
        bad.kind = RecordKind::Chat;
        assert!(matches!(parse_log(&bad.to_line()), Err(LogError::Malformed { line: 1, .. })));
        let skipped: String = [&log[0], &log[2]].iter().map(|r| r.to_line() + "\n").collect();
        assert!(matches!(parse_log(&skipped), Err(LogError::Malformed { line: 2, .. })));
    }

    #[test]
    fn transcripts_split_by_round() {
        let (_, log) = short_game();
        let ts = load_transcripts(&log);
        assert_eq!(ts.len(), 2);
        assert_eq!(ts[0].round, 1);
        let texts: Vec<_> = ts[0].messages.iter().map(|m| m.text.as_str()).collect();
        assert_eq!(texts, ["hello", "ok"]);
        assert!(ts[1].messages.is_empty());
        assert_eq!(ts[1].player_ids, ["p1", "p2"]);
    }

    #[test]
    fn long_chat_survives_log_roundtrip() {
        let mut room = Room::new("r", 1, catalog()).unwrap();
        let mut log = Vec::new();
        log.extend(room.handle(Command::Join { name: "a".into() }, 1).unwrap().records);
        log.extend(room.handle(Command::Join { name: "b".into() }, 1).unwrap().records);
        let text: String = "ab ".repeat(333) + "z";
        assert_eq!(text.len(), 1000);
        log.extend(room.handle(Command::Chat { player: "p2".into(), text: text.clone() }, 2).unwrap().records);
        let lines: String = log.iter().map(|r| r.to_line() + "\n").collect();
        let back = parse_log(&lines).unwrap();
        let state = replay("r", &back, catalog()).unwrap();
        assert_eq!(state.chat[0].text, text);
        assert_eq!(load_transcripts(&back)[0].messages[0].text, text);
    }
}
