//! Live OpenAI-compatible HTTP backend with capped exponential backoff.

use super::{Backend, BackendKind, ClientError, CompletionRequest, CompletionResponse};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

/// Legacy completions endpoint vs chat messages; a per-model switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApiStyle {
    Chat,
    Completions,
}

#[derive(Debug, Clone)]
pub struct LiveConfig {
    pub base_url: String,
    pub api_key: String,
    pub api_style: ApiStyle,
    pub max_attempts: u32,
    pub backoff_base: Duration,
    pub backoff_cap: Duration,
    pub request_timeout: Duration,
    /// Seed for backoff jitter; fixed so retry behavior reproduces.
    pub jitter_seed: u64,
}

impl Default for LiveConfig {
    fn default() -> LiveConfig {
        LiveConfig {
            base_url: "https://api.openai.com/v1".to_string(),
            api_key: String::new(),
            api_style: ApiStyle::Chat,
            max_attempts: 5,
            backoff_base: Duration::from_secs(1),
            backoff_cap: Duration::from_secs(60),
            request_timeout: Duration::from_secs(120),
            jitter_seed: 0,
        }
    }
}

/// delay(n) = min(cap, base * 2^n * (1 + jitter)), jitter in [0, 0.25).
/// The jitter band is narrow enough that doubling keeps the sequence
/// strictly monotone until the cap.
fn backoff_delay(retry_index: u32, base: Duration, cap: Duration, jitter: f64) -> Duration {
    let exact = base.as_secs_f64() * 2f64.powi(retry_index as i32) * (1.0 + jitter);
    Duration::from_secs_f64(exact.min(cap.as_secs_f64()))
}

/// Delays between attempts: strictly increasing, jittered, capped.
pub fn backoff_delays(retries: u32, base: Duration, cap: Duration, seed: u64) -> Vec<Duration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..retries)
        .map(|i| backoff_delay(i, base, cap, rng.gen_range(0.0..0.25)))
        .collect()
}

pub struct LiveBackend {
    config: LiveConfig,
    http: reqwest::blocking::Client,
    calls: AtomicUsize,
    jitter_rng: Mutex<ChaCha8Rng>,
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<LiveBackend, ClientError> {
        if config.api_key.is_empty() {
            return Err(ClientError::InvalidRequest(
                "live backend requires an API key".to_string(),
            ));
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| ClientError::Network(e.to_string()))?;
        let jitter_rng = Mutex::new(ChaCha8Rng::seed_from_u64(config.jitter_seed));
        Ok(LiveBackend {
            config,
            http,
            calls: AtomicUsize::new(0),
            jitter_rng,
        })
    }

    fn endpoint(&self) -> String {
        let base = self.config.base_url.trim_end_matches('/');
        match self.config.api_style {
            ApiStyle::Chat => format!("{base}/chat/completions"),
            ApiStyle::Completions => format!("{base}/completions"),
        }
    }

    fn body(&self, request: &CompletionRequest) -> serde_json::Value {
        match self.config.api_style {
            ApiStyle::Chat => json!({
                "model": request.model,
                "messages": [{"role": "user", "content": request.prompt}],
                "temperature": request.temperature,
                "top_p": request.top_p,
                "max_tokens": request.max_tokens,
                "stop": request.stop_sequences,
            }),
            ApiStyle::Completions => json!({
                "model": request.model,
                "prompt": request.prompt,
                "temperature": request.temperature,
                "top_p": request.top_p,
                "max_tokens": request.max_tokens,
                "stop": request.stop_sequences,
            }),
        }
    }

    fn extract_text(&self, body: &str) -> Result<String, ClientError> {
        #[derive(Deserialize)]
        struct Message {
            content: String,
        }
        #[derive(Deserialize)]
        struct Choice {
            message: Option<Message>,
            text: Option<String>,
        }
        #[derive(Deserialize)]
        struct Payload {
            choices: Vec<Choice>,
        }
        let payload: Payload = serde_json::from_str(body).map_err(|e| ClientError::Provider {
            status: 200,
            message: format!("unparseable provider response: {e}"),
        })?;
        let choice = payload
            .choices
            .into_iter()
            .next()
            .ok_or(ClientError::Provider {
                status: 200,
                message: "provider returned no choices".to_string(),
            })?;
        match (choice.message, choice.text) {
            (Some(m), _) => Ok(m.content),
            (None, Some(t)) => Ok(t),
            (None, None) => Err(ClientError::Provider {
                status: 200,
                message: "choice carries neither message nor text".to_string(),
            }),
        }
    }

    fn attempt(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        let response = self
            .http
            .post(self.endpoint())
            .bearer_auth(&self.config.api_key)
            .json(&self.body(request))
            .send()
            .map_err(|e| ClientError::Network(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| ClientError::Network(e.to_string()))?;
        if status.is_success() {
            return self.extract_text(&text);
        }
        Err(ClientError::Provider {
            status: status.as_u16(),
            message: text.chars().take(500).collect(),
        })
    }

    fn is_transient(error: &ClientError) -> bool {
        match error {
            ClientError::Network(_) => true,
            ClientError::Provider { status, .. } => {
                *status == 429 || *status == 529 || (500..600).contains(&(*status as usize))
            }
            _ => false,
        }
    }
}

impl Backend for LiveBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        request.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);

        let mut last_error: Option<ClientError> = None;
        for attempt in 0..self.config.max_attempts {
            if attempt > 0 {
                let jitter: f64 = self.jitter_rng.lock().unwrap().gen_range(0.0..0.25);
                std::thread::sleep(backoff_delay(
                    attempt - 1,
                    self.config.backoff_base,
                    self.config.backoff_cap,
                    jitter,
                ));
            }
            match self.attempt(request) {
                Ok(text) => {
                    return Ok(CompletionResponse {
                        text,
                        backend: BackendKind::Live,
                        cached: false,
                    })
                }
                Err(error) if Self::is_transient(&error) => last_error = Some(error),
                Err(error) => return Err(error),
            }
        }
        Err(match last_error {
            Some(ClientError::Provider { status, message }) => {
                ClientError::Network(format!("gave up after retries; last: {status} {message}"))
            }
            Some(ClientError::Network(m)) => ClientError::Network(m),
            _ => ClientError::Network("gave up after retries".to_string()),
        })
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_is_strictly_increasing_and_capped() {
        for seed in 0..50 {
            let delays = backoff_delays(4, Duration::from_secs(1), Duration::from_secs(60), seed);
            for pair in delays.windows(2) {
                assert!(pair[1] > pair[0], "seed {seed}: {delays:?}");
            }
            assert!(delays.iter().all(|d| *d <= Duration::from_secs(60)));
        }
    }

    #[test]
    fn live_requires_api_key() {
        assert!(matches!(
            LiveBackend::new(LiveConfig::default()).err(),
            Some(ClientError::InvalidRequest(_))
        ));
    }

    #[test]
    fn chat_and_completion_bodies_differ_in_shape() {
        let config = LiveConfig {
            api_key: "k".to_string(),
            ..LiveConfig::default()
        };
        let chat = LiveBackend::new(config.clone()).unwrap();
        let legacy = LiveBackend::new(LiveConfig {
            api_style: ApiStyle::Completions,
            ..config
        })
        .unwrap();
        let request = CompletionRequest::new("m", "hello", 0.0);
        assert!(chat.body(&request).get("messages").is_some());
        assert!(legacy.body(&request).get("prompt").is_some());
        assert_eq!(
            chat.endpoint(),
            "https://api.openai.com/v1/chat/completions"
        );
        assert_eq!(legacy.endpoint(), "https://api.openai.com/v1/completions");
    }

    #[test]
    fn extracts_text_from_both_schemas() {
        let config = LiveConfig {
            api_key: "k".to_string(),
            ..LiveConfig::default()
        };
        let backend = LiveBackend::new(config).unwrap();
        let chat = r#"{"choices":[{"message":{"content":"hi"}}]}"#;
        let legacy = r#"{"choices":[{"text":"hi"}]}"#;
        assert_eq!(backend.extract_text(chat).unwrap(), "hi");
        assert_eq!(backend.extract_text(legacy).unwrap(), "hi");
    }
}
