//! Chat backends behind one trait: a live HTTP client, a replay store that
//! serves recorded responses keyed by request digest, and a recording
//! wrapper that captures fixtures while passing calls through.
//!
//! The request digest is a pure function of the messages and the sampling
//! parameters, so a recorded run replays byte-identically with zero network
//! calls.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One chat turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    /// `system`, `user`, or `assistant`.
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: "user".into(), content: content.into() }
    }
}

/// Sampling and loop parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmParams {
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Generation + self-correction budget; must be at least 1.
    pub max_attempts: u32,
    pub model: String,
}

impl Default for LlmParams {
    fn default() -> LlmParams {
        LlmParams { temperature: 1.0, max_output_tokens: 2048, max_attempts: 5, model: String::new() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("fixture_missing: no recorded response for request digest {digest}")]
    FixtureMissing { digest: String },
    #[error("http status {status}: {detail}")]
    Http { status: u16, detail: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("missing API key: environment variable {0} is not set")]
    MissingKey(String),
    #[error("fixture store error: {0}")]
    Store(String),
}

/// The unified completion interface every backend implements.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, messages: &[ChatMessage], params: &LlmParams) -> Result<String, BackendError>;
}

/// The canonical serialization a request digest is computed over.
#[derive(Serialize)]
struct RequestEnvelope<'a> {
    messages: &'a [ChatMessage],
    model: &'a str,
    temperature: f64,
    max_output_tokens: u32,
}

fn envelope_json(messages: &[ChatMessage], params: &LlmParams) -> serde_json::Value {
    serde_json::to_value(RequestEnvelope {
        messages,
        model: &params.model,
        temperature: params.temperature,
        max_output_tokens: params.max_output_tokens,
    })
    .expect("request envelope serializes")
}

/// Hex digest identifying a request; stable across runs and processes.
pub fn request_digest(messages: &[ChatMessage], params: &LlmParams) -> String {
    let json = serde_json::to_string(&envelope_json(messages, params)).expect("envelope serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// One stored request/response pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fixture {
    pub request: serde_json::Value,
    pub response: String,
}

/// Serves recorded responses from a fixture directory. Never touches the
/// network: a request without a fixture is `fixture_missing`.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    dir: PathBuf,
}

impl ReplayBackend {
    pub fn new(dir: impl Into<PathBuf>) -> ReplayBackend {
        ReplayBackend { dir: dir.into() }
    }

    pub fn fixture_path(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, messages: &[ChatMessage], params: &LlmParams) -> Result<String, BackendError> {
        let digest = request_digest(messages, params);
        let path = self.fixture_path(&digest);
        let text = fs::read_to_string(&path).map_err(|_| BackendError::FixtureMissing { digest })?;
        let fixture: Fixture =
            serde_json::from_str(&text).map_err(|e| BackendError::Store(format!("{}: {e}", path.display())))?;
        Ok(fixture.response)
    }
}

/// Writes a fixture for `messages` into `dir`, keyed by the request digest.
/// This is how replay stores are seeded, both by the recording backend and
/// by tests.
pub fn store_fixture(
    dir: &Path,
    messages: &[ChatMessage],
    params: &LlmParams,
    response: &str,
) -> Result<PathBuf, BackendError> {
    let digest = request_digest(messages, params);
    let fixture = Fixture { request: envelope_json(messages, params), response: response.to_string() };
    let path = dir.join(format!("{digest}.json"));
    let body = serde_json::to_string_pretty(&fixture).expect("fixture serializes");
    fs::write(&path, body).map_err(|e| BackendError::Store(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Calls an inner backend and records every successful response as a
/// fixture, so a later replay run can reproduce the session offline.
pub struct RecordBackend<B> {
    inner: B,
    dir: PathBuf,
}

impl<B: ChatBackend> RecordBackend<B> {
    pub fn new(inner: B, dir: impl Into<PathBuf>) -> RecordBackend<B> {
        RecordBackend { inner, dir: dir.into() }
    }
}

impl<B: ChatBackend> ChatBackend for RecordBackend<B> {
    fn complete(&self, messages: &[ChatMessage], params: &LlmParams) -> Result<String, BackendError> {
        let response = self.inner.complete(messages, params)?;
        store_fixture(&self.dir, messages, params, &response)?;
        Ok(response)
    }
}

/// Which JSON wire format the endpoint speaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireFormat {
    /// `{model, messages, ...} -> choices[0].message.content`
    ChatCompletions,
    /// `{model, system, messages, ...} -> content[].text` blocks
    MessagesApi,
}

/// Live HTTP backend configuration. The API key is read from the named
/// environment variable at call time.
#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub endpoint: String,
    pub api_key_env: String,
    pub wire: WireFormat,
    /// Extra retries on 429/5xx and transport failures.
    pub max_retries: u32,
    pub initial_backoff: Duration,
    /// Concurrent in-flight request cap.
    pub max_in_flight: usize,
}

impl Default for HttpConfig {
    fn default() -> HttpConfig {
        HttpConfig {
            endpoint: String::new(),
            api_key_env: "LGDL_API_KEY".into(),
            wire: WireFormat::ChatCompletions,
            max_retries: 3,
            initial_backoff: Duration::from_millis(500),
            max_in_flight: 4,
        }
    }
}

/// A counting gate bounding concurrent requests.
struct Gate {
    max: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    fn new(max: usize) -> Gate {
        Gate { max: max.max(1), in_flight: Mutex::new(0), freed: Condvar::new() }
    }

    fn acquire(&self) {
        let mut count = self.in_flight.lock().expect("gate lock");
        while *count >= self.max {
            count = self.freed.wait(count).expect("gate wait");
        }
        *count += 1;
    }

    fn release(&self) {
        let mut count = self.in_flight.lock().expect("gate lock");
        *count -= 1;
        self.freed.notify_one();
    }
}

/// Blocking HTTP chat client with retry-with-backoff and an in-flight cap.
pub struct HttpBackend {
    config: HttpConfig,
    gate: Gate,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> HttpBackend {
        let gate = Gate::new(config.max_in_flight);
        HttpBackend { config, gate }
    }

    fn body(&self, messages: &[ChatMessage], params: &LlmParams) -> serde_json::Value {
        match self.config.wire {
            WireFormat::ChatCompletions => serde_json::json!({
                "model": params.model,
                "messages": messages,
                "temperature": params.temperature,
                "max_tokens": params.max_output_tokens,
            }),
            WireFormat::MessagesApi => {
                let system: Vec<&str> = messages
                    .iter()
                    .filter(|m| m.role == "system")
                    .map(|m| m.content.as_str())
                    .collect();
                let turns: Vec<&ChatMessage> = messages.iter().filter(|m| m.role != "system").collect();
                serde_json::json!({
                    "model": params.model,
                    "system": system.join("\n\n"),
                    "messages": turns,
                    "temperature": params.temperature,
                    "max_tokens": params.max_output_tokens,
                })
            }
        }
    }

    fn extract_text(&self, value: &serde_json::Value) -> Result<String, BackendError> {
        match self.config.wire {
            WireFormat::ChatCompletions => value["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| BackendError::Malformed("no choices[0].message.content".into())),
            WireFormat::MessagesApi => {
                let blocks = value["content"]
                    .as_array()
                    .ok_or_else(|| BackendError::Malformed("no content blocks".into()))?;
                let text: Vec<&str> = blocks.iter().filter_map(|b| b["text"].as_str()).collect();
                if text.is_empty() {
                    return Err(BackendError::Malformed("no text blocks in content".into()));
                }
                Ok(text.join(""))
            }
        }
    }

    fn send_once(&self, body: &serde_json::Value, key: &str) -> Result<serde_json::Value, (bool, BackendError)> {
        let request = ureq::post(&self.config.endpoint).header("content-type", "application/json");
        let request = match self.config.wire {
            WireFormat::ChatCompletions => request.header("authorization", &format!("Bearer {key}")),
            WireFormat::MessagesApi => request.header("x-api-key", key),
        };
        match request.send_json(body) {
            Ok(mut response) => response
                .body_mut()
                .read_json::<serde_json::Value>()
                .map_err(|e| (false, BackendError::Malformed(e.to_string()))),
            Err(ureq::Error::StatusCode(code)) => {
                let retryable = code == 429 || code >= 500;
                Err((retryable, BackendError::Http { status: code, detail: "request rejected".into() }))
            }
            Err(other) => Err((true, BackendError::Transport(other.to_string()))),
        }
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, messages: &[ChatMessage], params: &LlmParams) -> Result<String, BackendError> {
        let key = std::env::var(&self.config.api_key_env)
            .map_err(|_| BackendError::MissingKey(self.config.api_key_env.clone()))?;
        let body = self.body(messages, params);
        self.gate.acquire();
        let result = (|| {
            let mut backoff = self.config.initial_backoff;
            let mut attempt = 0;
            loop {
                match self.send_once(&body, &key) {
                    Ok(value) => return self.extract_text(&value),
                    Err((retryable, error)) => {
                        if !retryable || attempt >= self.config.max_retries {
                            return Err(error);
                        }
                        std::thread::sleep(backoff);
                        backoff = backoff.saturating_mul(2);
                        attempt += 1;
                    }
                }
            }
        })();
        self.gate.release();
        result
    }
}
