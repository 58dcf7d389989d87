//! Provider-agnostic chat completion access.
//!
//! [`LlmClient`] wraps a [`Provider`] with retries, a global in-flight
//! limit, and an optional content-addressed [`TranscriptCache`]. In
//! replay-only mode the provider is never called: every request must be
//! answered from recorded transcripts.

mod cache;
mod client;
mod http;
mod mock;
mod retry;

pub use cache::TranscriptCache;
pub use client::{ClientCounters, LlmClient, Provider, ReplayOnlyProvider};
pub use http::{OpenAiCompatProvider, ProviderEntry, ProvidersConfig};
pub use mock::{AnswerKeyChannel, AnswerSpec, MockMode, MockProvider, ScriptStep};
pub use retry::RetryPolicy;

use crate::hashing::sha256_hex;
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmParams {
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl LlmParams {
    /// Deterministic settings for answering, back-checking and judging.
    pub fn evaluation() -> Self {
        LlmParams {
            temperature: 0.0,
            max_tokens: 1024,
            seed: None,
        }
    }

    /// Settings for open-ended generation.
    pub fn generation() -> Self {
        LlmParams {
            temperature: 0.7,
            max_tokens: 2048,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Purpose {
    Extract,
    Generate,
    Backcheck,
    Forge,
    Task,
    Translate,
    Judge,
}

impl Purpose {
    /// Temperature 0 for everything evaluative; sampling only where
    /// diversity is wanted (pair generation and ungrammatical variants).
    pub fn default_params(self) -> LlmParams {
        match self {
            Purpose::Generate | Purpose::Forge => LlmParams::generation(),
            _ => LlmParams::evaluation(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub provider: String,
    pub model_id: String,
    pub messages: Vec<ChatMessage>,
    pub params: LlmParams,
    pub purpose: Purpose,
}

impl LlmRequest {
    pub fn new(
        provider: &str,
        model_id: &str,
        purpose: Purpose,
        messages: Vec<ChatMessage>,
    ) -> Self {
        LlmRequest {
            provider: provider.to_string(),
            model_id: model_id.to_string(),
            messages,
            params: purpose.default_params(),
            purpose,
        }
    }

    /// Canonical hash over provider, model, messages and params. Object
    /// keys are serialized sorted and message content is hashed verbatim.
    /// The purpose tag is bookkeeping and does not take part.
    pub fn request_hash(&self) -> String {
        let canonical = json!({
            "provider": self.provider,
            "model": self.model_id,
            "messages": self.messages.iter().map(|m| json!({
                "role": m.role,
                "content": m.content,
            })).collect::<Vec<_>>(),
            "params": json!({
                "temperature": self.params.temperature,
                "max_tokens": self.params.max_tokens,
                "seed": self.params.seed,
            }),
        });
        sha256_hex(canonical.to_string().as_bytes())
    }

    /// Content of the last user message, if any.
    pub fn last_user(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.messages.is_empty() {
            return Err(LlmError::InvalidRequest("messages must be non-empty".into()));
        }
        if !(self.params.temperature >= 0.0) {
            return Err(LlmError::InvalidRequest("temperature must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub usage: Usage,
    pub latency_ms: u64,
}

/// A recorded request/response, stored verbatim under its request hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmTranscript {
    pub request_hash: String,
    pub request: LlmRequest,
    pub response_text: String,
    pub usage: Usage,
    pub latency_ms: u64,
    /// Unix seconds at recording time.
    pub timestamp: u64,
}

impl LlmTranscript {
    pub fn completion(&self) -> Completion {
        Completion {
            text: self.response_text.clone(),
            usage: self.usage.clone(),
            latency_ms: self.latency_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("transient provider failure: {0}")]
    Transient(String),
    #[error("missing or rejected credential in environment variable {var}")]
    Auth { var: String },
    #[error("request exceeds the model context: {0}")]
    ContextTooLong(String),
    #[error("mock script exhausted")]
    ScriptExhausted,
    #[error("provider error: {0}")]
    Fatal(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    #[error("LLM unavailable after {attempts} attempts: {last}")]
    Unavailable { attempts: u32, last: String },
    #[error("authentication failed: set environment variable {var}")]
    Auth { var: String },
    #[error("context too long: {0}")]
    ContextTooLong(String),
    #[error("replay miss for request {hash}")]
    ReplayMiss { hash: String },
    #[error("corrupt cache entry {path}: {reason}")]
    CacheCorrupt { path: String, reason: String },
    #[error("mock script exhausted")]
    ScriptExhausted,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("cache io error: {0}")]
    CacheIo(String),
    #[error("provider error: {0}")]
    Provider(String),
}

impl LlmError {
    /// Short machine-readable kind used in CLI error tails.
    pub fn kind(&self) -> &'static str {
        match self {
            LlmError::Unavailable { .. } => "LlmUnavailable",
            LlmError::Auth { .. } => "AuthError",
            LlmError::ContextTooLong(_) => "ContextTooLong",
            LlmError::ReplayMiss { .. } => "ReplayMiss",
            LlmError::CacheCorrupt { .. } => "CacheCorrupt",
            LlmError::ScriptExhausted => "ScriptExhausted",
            LlmError::InvalidRequest(_) => "InvalidRequest",
            LlmError::CacheIo(_) => "CacheIo",
            LlmError::Provider(_) => "ProviderError",
        }
    }
}

pub(crate) fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
