//! Blocking client for chat-completion endpoints.
//!
//! Requests are `{"model", "messages": [{"role", "content"}], ...params}`
//! posted to `{base_url}/chat/completions`; the reply text is read from
//! `choices[0].message.content`.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        ChatMessage { role, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChatError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

/// Anything that turns a message history into one assistant reply.
pub trait ChatBackend: Send + Sync {
    fn model_id(&self) -> &str;
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, ChatError>;
}

fn default_timeout() -> u64 {
    120
}

fn default_retries() -> u32 {
    3
}

fn default_backoff() -> u64 {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Extra attempts after the first on transient failures.
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// First backoff delay; doubled after each failed attempt.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    /// Sampling settings passed through verbatim (temperature, etc.).
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            model: model.into(),
            api_key_env: None,
            timeout_secs: default_timeout(),
            retries: default_retries(),
            backoff_ms: default_backoff(),
            params: Map::new(),
        }
    }
}

pub struct ChatClient {
    endpoint: EndpointConfig,
    agent: ureq::Agent,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fatal(ChatError),
}

impl ChatClient {
    pub fn new(endpoint: EndpointConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(endpoint.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        ChatClient { endpoint, agent }
    }

    pub fn endpoint(&self) -> &EndpointConfig {
        &self.endpoint
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.endpoint.base_url.trim_end_matches('/'))
    }

    fn body(&self, messages: &[ChatMessage]) -> Value {
        let mut body = self.endpoint.params.clone();
        body.insert("model".into(), Value::String(self.endpoint.model.clone()));
        body.insert("messages".into(), serde_json::to_value(messages).expect("messages serialize"));
        Value::Object(body)
    }

    fn attempt(&self, body: &Value, token: Option<&str>) -> Attempt {
        let mut req = self.agent.post(&self.url());
        if let Some(token) = token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = match req.send_json(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        if !(200..300).contains(&status) {
            return Attempt::Fatal(ChatError::Transport(format!("HTTP {status}")));
        }
        let value: Value = match resp.body_mut().read_json() {
            Ok(v) => v,
            Err(e) => return Attempt::Fatal(ChatError::MalformedResponse(e.to_string())),
        };
        match value.pointer("/choices/0/message/content").and_then(Value::as_str) {
            Some(text) => Attempt::Done(text.to_string()),
            None => Attempt::Fatal(ChatError::MalformedResponse(
                "no choices[0].message.content in response".into(),
            )),
        }
    }
}

/// Sends `messages` to the endpoint and returns the first choice's text,
/// retrying transport errors, 429 and 5xx with exponential backoff.
pub fn chat_completion(client: &ChatClient, messages: &[ChatMessage]) -> Result<String, ChatError> {
    let token = match &client.endpoint.api_key_env {
        Some(var) => Some(
            std::env::var(var).map_err(|_| ChatError::Transport(format!("environment variable {var} is not set")))?,
        ),
        None => None,
    };
    let body = client.body(messages);
    let mut delay = Duration::from_millis(client.endpoint.backoff_ms);
    let attempts = client.endpoint.retries + 1;
    let mut last = String::new();
    for attempt in 1..=attempts {
        match client.attempt(&body, token.as_deref()) {
            Attempt::Done(text) => return Ok(text),
            Attempt::Fatal(e) => return Err(e),
            Attempt::Retry(why) => {
                log::warn!("{} attempt {attempt}/{attempts} failed: {why}", client.url());
                last = why;
                if attempt < attempts {
                    thread::sleep(delay);
                    delay = delay.saturating_mul(2);
                }
            }
        }
    }
    Err(ChatError::Transport(format!("gave up after {attempts} attempts: {last}")))
}

impl ChatBackend for ChatClient {
    fn model_id(&self) -> &str {
        &self.endpoint.model
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String, ChatError> {
        chat_completion(self, messages)
    }
}
