//! WebSocket game server. Each room is owned by one task that applies
//! commands in arrival order and writes the event log before fanning out.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use placegame_core::eventlog::{log_path, read_log, replay_room, LogWriter};
use placegame_core::session::{room_seed, Command, Phase, Step};
use placegame_core::{ClientMessage, Room, SceneCatalog, ServerMessage};
use tokio::net::TcpListener;
use tokio::sync::{mpsc, oneshot};
use tower_http::services::ServeDir;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub catalog: Arc<SceneCatalog>,
    pub log_dir: PathBuf,
    pub root_seed: u64,
    pub static_dir: Option<PathBuf>,
}

type Outbox = mpsc::UnboundedSender<ServerMessage>;

enum RoomMsg {
    Join {
        name: String,
        out: Outbox,
        reply: oneshot::Sender<Result<String, ServerMessage>>,
    },
    Client {
        player: String,
        msg: ClientMessage,
    },
    Disconnect {
        player: String,
    },
}

#[derive(Clone)]
struct AppState {
    config: Arc<ServerConfig>,
    rooms: Arc<Mutex<HashMap<String, mpsc::UnboundedSender<RoomMsg>>>>,
}

fn error_frame(code: &str, message: impl Into<String>) -> ServerMessage {
    ServerMessage::Error {
        code: code.to_string(),
        message: message.into(),
    }
}

/// Room ids double as log file names.
pub fn valid_room_id(id: &str) -> bool {
    (1..=64).contains(&id.len()) && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn now_ms() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

pub fn router(config: ServerConfig) -> Router {
    let static_dir = config.static_dir.clone();
    let state = AppState {
        config: Arc::new(config),
        rooms: Arc::default(),
    };
    let mut app = Router::new().route("/ws", get(ws_handler)).with_state(state);
    if let Some(dir) = static_dir {
        app = app.nest_service("/app", ServeDir::new(dir));
    }
    app
}

pub async fn serve(listener: TcpListener, config: ServerConfig) -> anyhow::Result<()> {
    std::fs::create_dir_all(&config.log_dir)
        .with_context(|| format!("creating log directory {}", config.log_dir.display()))?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(config)).await?;
    Ok(())
}

async fn ws_handler(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, state))
}

fn encode(msg: &ServerMessage) -> Message {
    Message::Text(serde_json::to_string(msg).expect("frames serialize"))
}

async fn connection(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();

    // The first frame must be a join.
    let (room_id, name) = loop {
        match stream.next().await {
            Some(Ok(Message::Text(text))) => match serde_json::from_str::<ClientMessage>(&text) {
                Ok(ClientMessage::Join { room, name }) if valid_room_id(&room) => break (room, name),
                Ok(ClientMessage::Join { .. }) => {
                    let msg = "room ids are 1 to 64 letters, digits, '-' or '_'";
                    let _ = sink.send(encode(&error_frame("bad_room", msg))).await;
                }
                Ok(_) => {
                    let _ = sink.send(encode(&error_frame("not_joined", "first frame must be a join"))).await;
                }
                Err(e) => {
                    let _ = sink.send(encode(&error_frame("bad_frame", e.to_string()))).await;
                }
            },
            Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
            Some(Ok(_)) => {}
        }
    };

    let (out_tx, mut out_rx) = mpsc::unbounded_channel();
    let (reply_tx, reply_rx) = oneshot::channel();
    let room = room_handle(&state, &room_id);
    let joined = room
        .send(RoomMsg::Join {
            name,
            out: out_tx.clone(),
            reply: reply_tx,
        })
        .is_ok();
    let player = match (joined, reply_rx.await) {
        (true, Ok(Ok(player))) => player,
        (_, Ok(Err(frame))) => {
            let _ = sink.send(encode(&frame)).await;
            let _ = sink.close().await;
            return;
        }
        _ => {
            let _ = sink.send(encode(&error_frame("room_closed", "room is no longer available"))).await;
            return;
        }
    };

    let writer = tokio::spawn(async move {
        while let Some(msg) = out_rx.recv().await {
            if sink.send(encode(&msg)).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(frame)) = stream.next().await {
        match frame {
            Message::Text(text) => match serde_json::from_str::<ClientMessage>(&text) {
                Ok(ClientMessage::Join { .. }) => {
                    let _ = out_tx.send(error_frame("already_joined", "this connection already joined a room"));
                }
                Ok(msg) => {
                    if room.send(RoomMsg::Client { player: player.clone(), msg }).is_err() {
                        break;
                    }
                }
                Err(e) => {
                    let _ = out_tx.send(error_frame("bad_frame", e.to_string()));
                }
            },
            Message::Close(_) => break,
            _ => {}
        }
    }
    let _ = room.send(RoomMsg::Disconnect { player });
    drop(out_tx);
    writer.abort();
}

/// Returns the live room task for `room_id`, starting one if needed.
fn room_handle(state: &AppState, room_id: &str) -> mpsc::UnboundedSender<RoomMsg> {
    let mut rooms = state.rooms.lock().expect("room table poisoned");
    if let Some(tx) = rooms.get(room_id).filter(|tx| !tx.is_closed()) {
        return tx.clone();
    }
    let (tx, rx) = mpsc::unbounded_channel();
    rooms.insert(room_id.to_string(), tx.clone());
    let state = state.clone();
    let room_id = room_id.to_string();
    let mine = tx.clone();
    tokio::spawn(async move {
        if let Err(e) = run_room(&state, &room_id, rx).await {
            tracing::error!(room = %room_id, error = %e, "room stopped");
        }
        let mut rooms = state.rooms.lock().expect("room table poisoned");
        if rooms.get(&room_id).is_some_and(|tx| tx.same_channel(&mine)) {
            rooms.remove(&room_id);
        }
    });
    tx
}

/// Opens the room, replaying any log left by an earlier server run. Players
/// of such a room cannot reconnect, so they are treated as having left.
fn open_room(config: &ServerConfig, room_id: &str) -> anyhow::Result<(Room, LogWriter)> {
    let path = log_path(&config.log_dir, room_id);
    let mut room = if path.exists() {
        let records = read_log(&path)?;
        replay_room(room_id, &records, config.catalog.clone())?
    } else {
        Room::new(room_id, room_seed(config.root_seed, room_id), config.catalog.clone())?
    };
    let mut writer = LogWriter::open(&config.log_dir, room_id)?;
    let stale: Vec<String> = room
        .state()
        .players
        .iter()
        .filter(|p| p.connected)
        .map(|p| p.player_id.clone())
        .collect();
    for player in stale {
        if let Ok(step) = room.handle(Command::Leave { player }, now_ms()) {
            writer.append_all(&step.records)?;
        }
    }
    Ok((room, writer))
}

async fn run_room(state: &AppState, room_id: &str, mut rx: mpsc::UnboundedReceiver<RoomMsg>) -> anyhow::Result<()> {
    let (mut room, mut writer) = match open_room(&state.config, room_id) {
        Ok(opened) => opened,
        Err(e) => {
            // Refuse everyone until the task ends and the handle is dropped.
            rx.close();
            while let Some(msg) = rx.recv().await {
                if let RoomMsg::Join { reply, .. } = msg {
                    let _ = reply.send(Err(error_frame("room_unavailable", e.to_string())));
                }
            }
            return Err(e);
        }
    };
    let mut outboxes: HashMap<String, Outbox> = HashMap::new();

    while let Some(msg) = rx.recv().await {
        match msg {
            RoomMsg::Join { name, out, reply } => match room.join(&name, now_ms()) {
                Ok((player, step)) => {
                    tracing::info!(room = %room_id, %player, %name, "joined");
                    outboxes.insert(player.clone(), out);
                    let _ = reply.send(Ok(player));
                    dispatch(&mut writer, &outboxes, step)?;
                }
                Err(e) => {
                    let _ = reply.send(Err(e.to_frame()));
                }
            },
            RoomMsg::Client { player, msg } => {
                let Some(command) = Command::from_client(&player, msg) else { continue };
                match room.handle(command, now_ms()) {
                    Ok(step) => dispatch(&mut writer, &outboxes, step)?,
                    Err(e) => {
                        if let Some(out) = outboxes.get(&player) {
                            let _ = out.send(e.to_frame());
                        }
                    }
                }
            }
            RoomMsg::Disconnect { player } => {
                outboxes.remove(&player);
                tracing::info!(room = %room_id, %player, "left");
                if let Ok(step) = room.handle(Command::Leave { player }, now_ms()) {
                    dispatch(&mut writer, &outboxes, step)?;
                }
            }
        }
        if room.state().phase == Phase::Finished && outboxes.is_empty() {
            break;
        }
    }
    writer.sync()?;
    Ok(())
}

/// Log first, then deliver.
fn dispatch(writer: &mut LogWriter, outboxes: &HashMap<String, Outbox>, step: Step) -> anyhow::Result<()> {
    writer.append_all(&step.records)?;
    for out in step.outbound {
        if let Some(tx) = outboxes.get(&out.to) {
            let _ = tx.send(out.msg);
        }
    }
    Ok(())
}
