//! Network client that drives a [`Policy`] over the WebSocket protocol.

use anyhow::{bail, Context};
use futures::{SinkExt, StreamExt};
use placegame_core::selfplay::Policy;
use placegame_core::{ClientMessage, ServerMessage};
use tokio_tungstenite::tungstenite::Message;

/// What a client saw by the time its game ended.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientOutcome {
    pub player_id: String,
    pub scores: Vec<f64>,
    pub frames: Vec<ServerMessage>,
}

/// Accepts `host:port` or a full `ws://` / `wss://` URL.
pub fn ws_url(server: &str) -> String {
    if server.starts_with("ws://") || server.starts_with("wss://") {
        server.to_string()
    } else {
        format!("ws://{server}/ws")
    }
}

/// Joins `room` as `name` and lets `policy` play until the game ends.
///
/// Policy calls run on the blocking pool since a parser may wait on the network.
pub async fn run_policy<P>(server: &str, room: &str, name: &str, mut policy: P) -> anyhow::Result<ClientOutcome>
where
    P: Policy + Send + 'static,
{
    let url = ws_url(server);
    let (mut ws, _) = tokio_tungstenite::connect_async(&url)
        .await
        .with_context(|| format!("connecting to {url}"))?;
    let join = ClientMessage::Join {
        room: room.to_string(),
        name: name.to_string(),
    };
    ws.send(Message::Text(serde_json::to_string(&join)?)).await?;

    let mut player_id = None;
    let mut frames = Vec::new();
    while let Some(frame) = ws.next().await {
        let text = match frame? {
            Message::Text(text) => text,
            Message::Close(_) => break,
            _ => continue,
        };
        let msg: ServerMessage = serde_json::from_str(&text).with_context(|| format!("bad server frame {text}"))?;
        match &msg {
            ServerMessage::Joined { player_id: id } => player_id = Some(id.clone()),
            ServerMessage::Error { code, message } if player_id.is_none() => bail!("join refused: {code}: {message}"),
            ServerMessage::Error { code, message } => tracing::warn!(%code, %message, "server error"),
            _ => {}
        }
        let observed = msg.clone();
        let (back, actions) = tokio::task::spawn_blocking(move || {
            let actions = policy.observe(&observed);
            (policy, actions)
        })
        .await?;
        policy = back;
        for action in actions {
            ws.send(Message::Text(serde_json::to_string(&action)?)).await?;
        }
        let scores = match &msg {
            ServerMessage::GameEnd { scores } => Some(scores.clone()),
            _ => None,
        };
        frames.push(msg);
        if let Some(scores) = scores {
            let _ = ws.close(None).await;
            return Ok(ClientOutcome {
                player_id: player_id.unwrap_or_default(),
                scores,
                frames,
            });
        }
    }
    bail!("connection closed before the game ended")
}
