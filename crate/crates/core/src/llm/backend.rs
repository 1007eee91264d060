//! Completion backends: an HTTP chat-completion client, a replay store
//! keyed by prompt hash, and a fixture-backed mock.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::prompt::Prompt;

/// File extension for mock fixtures and nothing else.
pub const MOCK_EXTENSION: &str = "response";

#[derive(Debug, Error)]
pub enum RequestError {
    #[error("API key environment variable {0:?} is not set")]
    MissingApiKey(String),
    #[error("llm.{0} must be set for the {1} backend")]
    MissingSetting(&'static str, &'static str),
    #[error("invalid llm config: {0}")]
    InvalidConfig(String),
    #[error("request failed after {attempts} attempts (last status: {})", .last_status.map_or("none".to_string(), |s| s.to_string()))]
    TransportExhausted {
        last_status: Option<u16>,
        attempts: u32,
        detail: String,
    },
    #[error("server rejected the request with status {status}: {body}")]
    HttpStatus { status: u16, body: String },
    #[error("chat response has no message content: {0}")]
    BadResponse(String),
    #[error("no recorded response for prompt hash {0}")]
    ReplayMiss(String),
    #[error("no mock fixture for {0:?}")]
    MockMiss(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpChat,
    Replay,
    #[default]
    Mock,
}

impl BackendKind {
    fn name(self) -> &'static str {
        match self {
            BackendKind::HttpChat => "http_chat",
            BackendKind::Replay => "replay",
            BackendKind::Mock => "mock",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub backend: BackendKind,
    /// Chat-completion URL, e.g. `https://host/v1/chat/completions`.
    pub endpoint_url: Option<String>,
    pub model_name: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub auth_header: String,
    /// Prefix placed before the key in `auth_header`; empty for none.
    pub auth_scheme: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub retry_backoff_base_ms: u64,
    pub timeout_secs: f64,
    /// Refuse prompts whose estimated token count exceeds this.
    pub max_prompt_tokens_estimate: Option<usize>,
    pub replay_dir: Option<PathBuf>,
    /// With `http_chat`, also write each response into `replay_dir`.
    pub record: bool,
    pub mock_dir: Option<PathBuf>,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            backend: BackendKind::default(),
            endpoint_url: None,
            model_name: String::new(),
            api_key_env: None,
            auth_header: "Authorization".into(),
            auth_scheme: "Bearer".into(),
            temperature: 0.0,
            max_retries: 3,
            retry_backoff_base_ms: 1000,
            timeout_secs: 120.0,
            max_prompt_tokens_estimate: None,
            replay_dir: None,
            record: false,
            mock_dir: None,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), RequestError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(RequestError::InvalidConfig(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return Err(RequestError::InvalidConfig(format!(
                "timeout_secs must be > 0, got {}",
                self.timeout_secs
            )));
        }
        let kind = self.backend.name();
        match self.backend {
            BackendKind::HttpChat => {
                if self.endpoint_url.is_none() {
                    return Err(RequestError::MissingSetting("endpoint_url", kind));
                }
                if self.record && self.replay_dir.is_none() {
                    return Err(RequestError::MissingSetting("replay_dir", kind));
                }
            }
            BackendKind::Replay if self.replay_dir.is_none() => {
                return Err(RequestError::MissingSetting("replay_dir", kind));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn retry_backoff_base(&self) -> Duration {
        Duration::from_millis(self.retry_backoff_base_ms)
    }
}

/// What a backend is asked to complete.
#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub pair_id: &'a str,
    /// 0-based chunk number and total chunk count for this pair.
    pub chunk: usize,
    pub chunks: usize,
    pub prompt: &'a Prompt,
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, RequestError>;
}

/// Directory of raw responses, one file per prompt, named by
/// [`Prompt::stable_hash`].
#[derive(Debug, Clone)]
pub struct ReplayStore {
    dir: PathBuf,
}

impl ReplayStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayStore { dir: dir.into() }
    }

    pub fn path_for(&self, prompt: &Prompt) -> PathBuf {
        self.dir.join(prompt.stable_hash())
    }

    pub fn get(&self, prompt: &Prompt) -> Result<String, RequestError> {
        let path = self.path_for(prompt);
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Err(RequestError::ReplayMiss(prompt.stable_hash()))
            }
            Err(source) => Err(RequestError::Io { path, source }),
        }
    }

    /// Writes atomically via a temporary sibling file.
    pub fn put(&self, prompt: &Prompt, raw: &str) -> Result<(), RequestError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| RequestError::Io { path, source }
        };
        std::fs::create_dir_all(&self.dir).map_err(io(&self.dir))?;
        let path = self.path_for(prompt);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        std::fs::write(&tmp, raw).map_err(io(&tmp))?;
        std::fs::rename(&tmp, &path).map_err(io(&path))
    }
}

impl CompletionBackend for ReplayStore {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, RequestError> {
        self.get(request.prompt)
    }
}

/// Returns canned responses by pair id.
///
/// For multi-chunk requests the key `<pair_id>.chunk<N>` (1-based) is tried
/// before `<pair_id>`. In directory form each key maps to the file
/// `<key>.response`.
#[derive(Debug, Clone)]
pub enum MockBackend {
    Dir(PathBuf),
    Map(HashMap<String, String>),
}

impl MockBackend {
    fn keys(request: &CompletionRequest<'_>) -> Vec<String> {
        let mut keys = Vec::with_capacity(2);
        if request.chunks > 1 {
            keys.push(format!("{}.chunk{}", request.pair_id, request.chunk + 1));
        }
        keys.push(request.pair_id.to_string());
        keys
    }
}

impl CompletionBackend for MockBackend {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, RequestError> {
        let keys = Self::keys(request);
        for key in &keys {
            match self {
                MockBackend::Map(map) => {
                    if let Some(raw) = map.get(key) {
                        return Ok(raw.clone());
                    }
                }
                MockBackend::Dir(dir) => {
                    let path = dir.join(format!("{key}.{MOCK_EXTENSION}"));
                    match std::fs::read_to_string(&path) {
                        Ok(raw) => return Ok(raw),
                        Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
                        Err(source) => return Err(RequestError::Io { path, source }),
                    }
                }
            }
        }
        Err(RequestError::MockMiss(keys.last().cloned().unwrap_or_default()))
    }
}

/// Chat-completion client: POSTs `{model, messages, temperature}` and reads
/// `choices[0].message.content`.
pub struct HttpChatBackend {
    config: LlmConfig,
    endpoint: String,
    api_key: String,
    client: reqwest::blocking::Client,
    recorder: Option<ReplayStore>,
}

enum Attempt {
    Done(String),
    Retry { status: Option<u16>, detail: String },
}

impl HttpChatBackend {
    pub fn new(config: &LlmConfig) -> Result<Self, RequestError> {
        let endpoint = config
            .endpoint_url
            .clone()
            .ok_or(RequestError::MissingSetting("endpoint_url", "http_chat"))?;
        let var = config
            .api_key_env
            .clone()
            .ok_or(RequestError::MissingSetting("api_key_env", "http_chat"))?;
        let api_key = std::env::var(&var)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or(RequestError::MissingApiKey(var))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| RequestError::InvalidConfig(e.to_string()))?;
        let recorder = if config.record {
            let dir = config
                .replay_dir
                .clone()
                .ok_or(RequestError::MissingSetting("replay_dir", "http_chat"))?;
            Some(ReplayStore::new(dir))
        } else {
            None
        };
        Ok(HttpChatBackend {
            config: config.clone(),
            endpoint,
            api_key,
            client,
            recorder,
        })
    }

    pub fn request_body(&self, prompt: &Prompt) -> Value {
        json!({
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
            "temperature": self.config.temperature,
        })
    }

    fn attempt(&self, body: &Value) -> Result<Attempt, RequestError> {
        let auth = if self.config.auth_scheme.is_empty() {
            self.api_key.clone()
        } else {
            format!("{} {}", self.config.auth_scheme, self.api_key)
        };
        let response = match self
            .client
            .post(&self.endpoint)
            .header(self.config.auth_header.as_str(), auth)
            .json(body)
            .send()
        {
            Ok(r) => r,
            Err(e) if e.is_timeout() || e.is_connect() || e.is_request() => {
                return Ok(Attempt::Retry {
                    status: None,
                    detail: e.to_string(),
                })
            }
            Err(e) => {
                return Err(RequestError::TransportExhausted {
                    last_status: None,
                    attempts: 1,
                    detail: e.to_string(),
                })
            }
        };
        let status = response.status();
        let text = match response.text() {
            Ok(t) => t,
            Err(e) => {
                return Ok(Attempt::Retry {
                    status: Some(status.as_u16()),
                    detail: e.to_string(),
                })
            }
        };
        if status.is_success() {
            return parse_chat_content(&text).map(Attempt::Done);
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Ok(Attempt::Retry {
                status: Some(status.as_u16()),
                detail: text,
            });
        }
        Err(RequestError::HttpStatus {
            status: status.as_u16(),
            body: text,
        })
    }
}

/// Extracts the assistant text from a chat-completion response body.
pub fn parse_chat_content(body: &str) -> Result<String, RequestError> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| RequestError::BadResponse(e.to_string()))?;
    let content = &value["choices"][0]["message"]["content"];
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<Vec<_>>()
            .join("")),
        _ => Err(RequestError::BadResponse(
            body.chars().take(200).collect::<String>(),
        )),
    }
}

impl CompletionBackend for HttpChatBackend {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, RequestError> {
        let body = self.request_body(request.prompt);
        let attempts = self.config.max_retries + 1;
        let mut last = (None, String::new());
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.config.retry_backoff_base() * 2u32.saturating_pow(attempt - 1);
                log::warn!(
                    "{} chunk {}: retrying in {:?} (attempt {}/{}, last status {:?})",
                    request.pair_id,
                    request.chunk + 1,
                    delay,
                    attempt + 1,
                    attempts,
                    last.0
                );
                std::thread::sleep(delay);
            }
            match self.attempt(&body)? {
                Attempt::Done(raw) => {
                    if let Some(store) = &self.recorder {
                        store.put(request.prompt, &raw)?;
                    }
                    return Ok(raw);
                }
                Attempt::Retry { status, detail } => last = (status, detail),
            }
        }
        Err(RequestError::TransportExhausted {
            last_status: last.0,
            attempts,
            detail: last.1,
        })
    }
}

/// Builds the backend named by `config.backend`.
pub fn backend_from_config(config: &LlmConfig) -> Result<Box<dyn CompletionBackend>, RequestError> {
    config.validate()?;
    Ok(match config.backend {
        BackendKind::HttpChat => Box::new(HttpChatBackend::new(config)?),
        BackendKind::Replay => Box::new(ReplayStore::new(
            config.replay_dir.clone().expect("validated"),
        )),
        BackendKind::Mock => Box::new(MockBackend::Dir(
            config
                .mock_dir
                .clone()
                .ok_or(RequestError::MissingSetting("mock_dir", "mock"))?,
        )),
    })
}

/// One completion call through the backend described by `config`.
pub fn request_alignment(request: &CompletionRequest<'_>, config: &LlmConfig) -> Result<String, RequestError> {
    backend_from_config(config)?.complete(request)
}
