use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::HeaderMap;
use axum::routing::post;
use axum::{Json, Router};
use placegame_core::agent::{
    BaselineAgent, CompletionBackend, LlmConfig, ParserAdapter, RemoteLlmParser, SynonymTable,
};
use placegame_core::agent::llm::INSTRUCTION_PROMPT;
use placegame_core::protocol::PlacementEntry;
use placegame_core::{ClientMessage, SceneCatalog, ServerMessage};
use placegame_server::llm_http::HttpCompletion;
use serde_json::{json, Value};
use tokio::net::TcpListener;

type Seen = Arc<Mutex<Vec<(Option<String>, Value)>>>;

/// Mock completion endpoint answering by prompt kind.
async fn complete(State(seen): State<Seen>, headers: HeaderMap, Json(body): Json<Value>) -> Json<Value> {
    let auth = headers.get("authorization").map(|v| v.to_str().unwrap().to_string());
    let prompt = body["prompt"].as_str().unwrap_or("").to_string();
    seen.lock().unwrap().push((auth, body));
    let answer = if prompt.starts_with("you are playing") {
        " True"
    } else if prompt.contains("extract two things") {
        " pants, stove"
    } else {
        " below"
    };
    Json(json!({ "choices": [{ "text": answer }] }))
}

async fn slow() -> Json<Value> {
    tokio::time::sleep(Duration::from_secs(3)).await;
    Json(json!({ "choices": [{ "text": "True" }] }))
}

async fn mock() -> (String, Seen) {
    let seen = Seen::default();
    let app = Router::new()
        .route("/v1/completions", post(complete))
        .route("/slow", post(slow))
        .with_state(seen.clone());
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}"), seen)
}

fn config(endpoint: String) -> LlmConfig {
    LlmConfig {
        endpoint,
        key: Some("sekrit".into()),
        model: "test-model".into(),
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn requests_carry_prompt_model_and_key() {
    let (base, seen) = mock().await;
    let backend = HttpCompletion::new(config(format!("{base}/v1/completions")), Duration::from_secs(5)).unwrap();
    let answer = tokio::task::spawn_blocking(move || backend.complete(INSTRUCTION_PROMPT)).await.unwrap();
    assert_eq!(answer.unwrap(), " True");
    let seen = seen.lock().unwrap();
    let (auth, body) = &seen[0];
    assert_eq!(auth.as_deref(), Some("Bearer sekrit"));
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0);
    assert_eq!(body["prompt"], INSTRUCTION_PROMPT);
}

#[tokio::test(flavor = "multi_thread")]
async fn remote_parser_reads_vocabulary_answers() {
    let (base, _) = mock().await;
    let backend = HttpCompletion::new(config(format!("{base}/v1/completions")), Duration::from_secs(5)).unwrap();
    let parsed = tokio::task::spawn_blocking(move || {
        let parser = RemoteLlmParser::new(backend);
        let lex = placegame_core::agent::Lexicon::for_scene(&placegame_core::Scene::kitchen(), &SynonymTable::default());
        parser.parse(&lex, "shove the jeans beneath the cooker")
    })
    .await
    .unwrap()
    .unwrap()
    .unwrap();
    assert_eq!(parsed.target, "pants");
    assert_eq!(parsed.landmark, "stove");
    assert_eq!(parsed.direction, placegame_core::agent::Direction::Below);
}

#[tokio::test(flavor = "multi_thread")]
async fn timeouts_and_dead_endpoints_fall_back_to_rules() {
    let (base, _) = mock().await;
    let slow = HttpCompletion::new(config(format!("{base}/slow")), Duration::from_millis(200)).unwrap();
    let started = std::time::Instant::now();
    let err = tokio::task::spawn_blocking(move || slow.complete("x")).await.unwrap();
    assert!(err.is_err());
    assert!(started.elapsed() < Duration::from_secs(2));

    // An agent whose endpoint is unreachable still follows canonical instructions.
    let dead = HttpCompletion::new(config("http://127.0.0.1:9/none".into()), Duration::from_millis(200)).unwrap();
    let catalog = Arc::new(SceneCatalog::builtin());
    let actions = tokio::task::spawn_blocking(move || {
        let mut agent = BaselineAgent::new(Box::new(RemoteLlmParser::new(dead)), catalog, SynonymTable::default());
        agent.step(&ServerMessage::Joined { player_id: "p2".into() });
        let placements = [("pillow", 90, 90), ("pants", 10, 90), ("garbage", 30, 90), ("cap", 70, 90), ("cowboy", 90, 10)]
            .map(|(o, x, y)| PlacementEntry { object: o.into(), x, y })
            .to_vec();
        agent.step(&ServerMessage::RoundStart { round: 1, scene: "kitchen".into(), placements });
        agent.step(&ServerMessage::Chat { from: "p1".into(), text: "put the pants below the sink".into(), ts: 1 })
    })
    .await
    .unwrap();
    assert!(actions.contains(&ClientMessage::Move { object: "pants".into(), x: 80, y: 70 }), "{actions:?}");
}
