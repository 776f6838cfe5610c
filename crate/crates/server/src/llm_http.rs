//! HTTP transport for the remote parser: a text-completion endpoint.

use std::time::Duration;

use placegame_core::agent::{CompletionBackend, LlmConfig};
use serde_json::{json, Value};
use tokio::runtime::Handle;

pub const MAX_TOKENS: u32 = 16;

/// Blocking facade over an async client. `complete` must be called off the
/// async worker threads, e.g. from `spawn_blocking`.
pub struct HttpCompletion {
    client: reqwest::Client,
    handle: Handle,
    config: LlmConfig,
}

impl HttpCompletion {
    /// Must be created inside a Tokio runtime.
    pub fn new(config: LlmConfig, timeout: Duration) -> anyhow::Result<Self> {
        Ok(Self {
            client: reqwest::Client::builder().timeout(timeout).build()?,
            handle: Handle::current(),
            config,
        })
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        json!({
            "model": self.config.model,
            "prompt": prompt,
            "max_tokens": MAX_TOKENS,
            "temperature": 0,
        })
    }

    async fn call(&self, prompt: &str) -> Result<String, String> {
        let mut req = self.client.post(&self.config.endpoint).json(&self.request_body(prompt));
        if let Some(key) = &self.config.key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| e.to_string())?;
        let resp = resp.error_for_status().map_err(|e| e.to_string())?;
        let body: Value = resp.json().await.map_err(|e| e.to_string())?;
        body["choices"][0]["text"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| format!("no completion text in response: {body}"))
    }
}

impl CompletionBackend for HttpCompletion {
    fn complete(&self, prompt: &str) -> Result<String, String> {
        self.handle.block_on(self.call(prompt))
    }
}
