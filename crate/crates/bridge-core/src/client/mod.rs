//! Backend abstraction over text-completion providers.
//!
//! Four implementations share one trait: a live OpenAI-compatible HTTP
//! client, a replay backend that serves a recorded cache and never touches
//! the network, a recording wrapper that fills such a cache, and a scripted
//! backend for tests.

mod live;
mod replay;
mod scripted;

pub use live::{backoff_delays, ApiStyle, LiveBackend, LiveConfig};
pub use replay::{load_cache, RecordBackend, ReplayBackend, ReplayRecord};
pub use scripted::ScriptedBackend;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// A single completion request. The prompt is the full few-shot block.
#[derive(Debug, Clone, Serialize)]
pub struct CompletionRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub stop_sequences: Vec<String>,
}

impl CompletionRequest {
    pub fn new(model: &str, prompt: &str, temperature: f64) -> CompletionRequest {
        CompletionRequest {
            model: model.to_string(),
            prompt: prompt.to_string(),
            temperature,
            top_p: 1.0,
            max_tokens: 512,
            stop_sequences: Vec::new(),
        }
    }

    pub fn with_stops(mut self, stops: Vec<String>) -> CompletionRequest {
        self.stop_sequences = stops;
        self
    }

    fn validate(&self) -> Result<(), ClientError> {
        if self.prompt.is_empty() {
            return Err(ClientError::InvalidRequest("empty prompt".to_string()));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(ClientError::InvalidRequest(format!(
                "bad temperature {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Canonical serialization of the key material. Identical requests
    /// serialize to identical bytes.
    pub fn canonical(&self) -> String {
        #[derive(Serialize)]
        struct KeyMaterial<'a> {
            model: &'a str,
            prompt: &'a str,
            temperature: f64,
            top_p: f64,
            stop_sequences: &'a [String],
        }
        serde_json::to_string(&KeyMaterial {
            model: &self.model,
            prompt: &self.prompt,
            temperature: self.temperature,
            top_p: self.top_p,
            stop_sequences: &self.stop_sequences,
        })
        .expect("request serialization cannot fail")
    }

    /// Hex SHA-256 digest of the canonical serialization; the replay key.
    pub fn cache_key(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical().as_bytes());
        hex::encode(hasher.finalize())
    }
}

/// Which implementation produced a response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    Replay,
    Record,
    Scripted,
}

/// Raw, unstripped provider output plus provenance.
#[derive(Debug, Clone)]
pub struct CompletionResponse {
    pub text: String,
    pub backend: BackendKind,
    pub cached: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("network error after retries: {0}")]
    Network(String),
    #[error("replay cache has no entry for key {0}")]
    ReplayMiss(String),
    #[error("scripted backend queue exhausted")]
    ScriptExhausted,
    #[error("provider error {status}: {message}")]
    Provider { status: u16, message: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A completion backend. Implementations must tolerate concurrent
/// `complete` calls from many worker threads.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ClientError>;

    /// Number of `complete` calls so far.
    fn calls(&self) -> usize;

    fn kind(&self) -> BackendKind;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_is_stable() {
        let make = || {
            CompletionRequest::new("m", "p", 0.1)
                .with_stops(vec!["\n\n".to_string(), "Question:".to_string()])
        };
        assert_eq!(make().canonical(), make().canonical());
        assert_eq!(make().cache_key(), make().cache_key());
        assert_eq!(make().cache_key().len(), 64);
    }

    #[test]
    fn key_varies_with_temperature_but_not_max_tokens() {
        let base = CompletionRequest::new("m", "p", 0.0);
        let hotter = CompletionRequest::new("m", "p", 0.1);
        assert_ne!(base.cache_key(), hotter.cache_key());

        let mut more_tokens = CompletionRequest::new("m", "p", 0.0);
        more_tokens.max_tokens = 1024;
        assert_eq!(base.cache_key(), more_tokens.cache_key());
    }

    #[test]
    fn validation_rejects_bad_requests() {
        let empty = CompletionRequest::new("m", "", 0.0);
        assert!(empty.validate().is_err());
        let negative = CompletionRequest::new("m", "p", -1.0);
        assert!(negative.validate().is_err());
        let nan = CompletionRequest::new("m", "p", f64::NAN);
        assert!(nan.validate().is_err());
    }
}
