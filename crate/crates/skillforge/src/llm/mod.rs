//! Provider-agnostic chat-completion client with record/replay and
//! scripted stubs, plus the prompt builders and response extractors for the
//! four loop stages.
//!
//! Modes:
//! - `live` — one HTTPS round-trip per call (OpenAI-compatible wire format)
//! - `record` — live, plus every request/response appended to a cassette
//! - `replay` — answers come from the cassette; request digests must match
//! - `stub:<name>` — a registered deterministic script, no network at all
//!
//! API keys are read from an environment variable named in the config and
//! never stored in cassettes, logs or run directories.

mod cassette;
mod http;
pub mod mock;
pub mod prompts;
pub mod stubs;

pub use cassette::{Cassette, CassetteEntry};
pub use prompts::{
    build_describe_prompt, build_eval_prompt, build_review_prompt, build_reward_prompt,
    extract_code_block, parse_verdict, render_report_table, render_schema, TrainingSummary,
    Verdict,
};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util;

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
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }
}

/// Client operating mode, parsed from strings like `live`, `record`,
/// `replay`, `stub:happy_path`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Mode {
    Live,
    Record,
    Replay,
    Stub(String),
}

impl TryFrom<String> for Mode {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        match s.as_str() {
            "live" => Ok(Mode::Live),
            "record" => Ok(Mode::Record),
            "replay" => Ok(Mode::Replay),
            other => match other.strip_prefix("stub:") {
                Some(name) if !name.is_empty() => Ok(Mode::Stub(name.to_string())),
                _ => Err(format!(
                    "invalid mode `{other}` (expected live, record, replay or stub:<name>)"
                )),
            },
        }
    }
}

impl From<Mode> for String {
    fn from(m: Mode) -> String {
        match m {
            Mode::Live => "live".into(),
            Mode::Record => "record".into(),
            Mode::Replay => "replay".into(),
            Mode::Stub(name) => format!("stub:{name}"),
        }
    }
}

/// Provider settings. The API key itself never appears here, only the name
/// of the environment variable holding it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub mode: Mode,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Cassette path; required for replay, target for record. Relative
    /// paths resolve against the run directory.
    #[serde(default)]
    pub cassette: Option<PathBuf>,
}

fn default_model() -> String {
    "gpt-4".into()
}

fn default_api_key_env() -> String {
    "SKILLFORGE_API_KEY".into()
}

fn default_timeout() -> u64 {
    120
}

fn default_retries() -> u32 {
    2
}

fn default_temperature() -> f64 {
    0.2
}

impl ProviderConfig {
    pub fn stub(name: &str) -> Self {
        ProviderConfig {
            mode: Mode::Stub(name.to_string()),
            base_url: None,
            model: default_model(),
            api_key_env: default_api_key_env(),
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            temperature: default_temperature(),
            cassette: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("live/record mode requires a base URL")]
    MissingBaseUrl,
    #[error("live/record mode requires the API key environment variable `{0}` to be set")]
    MissingApiKey(String),
    #[error("record/replay mode requires a cassette path")]
    MissingCassette,
    #[error("unknown stub `{0}`")]
    UnknownStub(String),
    #[error("transport failure after {attempts} attempts: {detail}")]
    Transport { attempts: u32, detail: String },
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    BadResponse(String),
    #[error(
        "replay digest mismatch at cassette entry {index}: {detail} \
         (the prompts of this run differ from the recorded ones)"
    )]
    DigestMismatch { index: usize, detail: String },
    #[error("cassette exhausted: request {index} has no recorded entry")]
    CassetteExhausted { index: usize },
    #[error("corrupt cassette {path}: {detail}")]
    CorruptCassette { path: String, detail: String },
    #[error("cassette io ({path}): {source}")]
    CassetteIo {
        path: String,
        source: std::io::Error,
    },
}

/// The exact JSON body sent on the wire and hashed into request digests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestBody {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
}

impl RequestBody {
    /// Canonical digest: SHA-256 over the serialized (model, temperature,
    /// messages) triple.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("request serializes");
        util::sha256_hex(json.as_bytes())
    }
}

enum Backend {
    Live(http::HttpBackend),
    Record {
        http: http::HttpBackend,
        cassette: Cassette,
        path: PathBuf,
    },
    Replay {
        cassette: Cassette,
        cursor: usize,
    },
    Stub(Box<dyn stubs::ScriptedStub + Send>),
}

/// A chat-completion client bound to one run.
pub struct LlmClient {
    config: ProviderConfig,
    backend: Backend,
    calls: u64,
}

impl LlmClient {
    /// Validate the config and open the backend. For replay, the cassette
    /// must exist; for record, an existing cassette is extended.
    pub fn new(config: ProviderConfig) -> Result<Self, LlmError> {
        let backend = match &config.mode {
            Mode::Live => Backend::Live(http::HttpBackend::new(&config)?),
            Mode::Record => {
                let path = config.cassette.clone().ok_or(LlmError::MissingCassette)?;
                let http = http::HttpBackend::new(&config)?;
                let cassette = if path.exists() {
                    Cassette::load(&path)?
                } else {
                    Cassette::empty()
                };
                Backend::Record { http, cassette, path }
            }
            Mode::Replay => {
                let path = config.cassette.clone().ok_or(LlmError::MissingCassette)?;
                let cassette = Cassette::load(&path)?;
                Backend::Replay { cassette, cursor: 0 }
            }
            Mode::Stub(name) => {
                let stub = stubs::make_stub(name).ok_or_else(|| LlmError::UnknownStub(name.clone()))?;
                Backend::Stub(stub)
            }
        };
        Ok(LlmClient {
            config,
            backend,
            calls: 0,
        })
    }

    pub fn mode(&self) -> &Mode {
        &self.config.mode
    }

    pub fn model(&self) -> &str {
        &self.config.model
    }

    pub fn temperature(&self) -> f64 {
        self.config.temperature
    }

    /// Total completed calls on this client.
    pub fn calls(&self) -> u64 {
        self.calls
    }

    /// Skip forward so the next call consumes cassette entry `n` (replay)
    /// or appends entry `n` (record). Used when resuming a run whose first
    /// `n` LLM calls already happened.
    pub fn seek(&mut self, n: u64) -> Result<(), LlmError> {
        match &mut self.backend {
            Backend::Replay { cursor, .. } => {
                *cursor = n as usize;
            }
            Backend::Record { cassette, .. } => {
                if (cassette.entries.len() as u64) < n {
                    return Err(LlmError::CassetteExhausted {
                        index: cassette.entries.len(),
                    });
                }
                cassette.entries.truncate(n as usize);
            }
            Backend::Live(_) | Backend::Stub(_) => {}
        }
        self.calls = n;
        Ok(())
    }

    /// One chat completion. See the module docs for per-mode behavior.
    pub fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let request = RequestBody {
            model: self.config.model.clone(),
            temperature: self.config.temperature,
            messages: messages.to_vec(),
        };
        let response = match &mut self.backend {
            Backend::Live(http) => http.complete(&request, &self.config)?,
            Backend::Record { http, cassette, path } => {
                let response = http.complete(&request, &self.config)?;
                let index = cassette.entries.len();
                cassette.append(CassetteEntry {
                    index,
                    digest: request.digest(),
                    request: request.clone(),
                    response: response.clone(),
                });
                cassette.save(path)?;
                response
            }
            Backend::Replay { cassette, cursor } => {
                let entry = cassette
                    .entries
                    .get(*cursor)
                    .ok_or(LlmError::CassetteExhausted { index: *cursor })?;
                let digest = request.digest();
                if digest != entry.digest {
                    let detail = diff_requests(&entry.request, &request);
                    return Err(LlmError::DigestMismatch {
                        index: *cursor,
                        detail,
                    });
                }
                *cursor += 1;
                entry.response.clone()
            }
            Backend::Stub(stub) => stub.respond(&request),
        };
        self.calls += 1;
        Ok(response)
    }
}

/// Human-readable description of the first difference between a recorded
/// request and the one being replayed.
fn diff_requests(recorded: &RequestBody, current: &RequestBody) -> String {
    if recorded.model != current.model {
        return format!(
            "model differs (recorded `{}`, current `{}`)",
            recorded.model, current.model
        );
    }
    if recorded.temperature != current.temperature {
        return format!(
            "temperature differs (recorded {}, current {})",
            recorded.temperature, current.temperature
        );
    }
    let n = recorded.messages.len().min(current.messages.len());
    for i in 0..n {
        let (r, c) = (&recorded.messages[i], &current.messages[i]);
        if r.role != c.role {
            return format!("message {i} role differs");
        }
        if r.content != c.content {
            let byte = r
                .content
                .bytes()
                .zip(c.content.bytes())
                .position(|(a, b)| a != b)
                .unwrap_or_else(|| r.content.len().min(c.content.len()));
            return format!("message {i} content differs from byte {byte}");
        }
    }
    format!(
        "message count differs (recorded {}, current {})",
        recorded.messages.len(),
        current.messages.len()
    )
}
