//! HTTP-backed providers speaking the OpenAI-compatible wire protocol
//! (`/v1/embeddings`, `/v1/chat/completions`).
//!
//! Retry policy lives here, not in callers: up to `attempts` tries with
//! exponential backoff, retrying only transient failures (network errors,
//! HTTP 5xx, HTTP 429). Authorization uses a bearer token read from an
//! environment variable whose *name* is configured — key material is never
//! stored in config files. A configurable max-in-flight gate bounds
//! concurrent requests per provider instance.

use super::{Completer, Embedder, EmbeddingVector, ProviderError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

/// Counting semaphore (permits + condvar); `acquire` blocks until a
/// permit frees up and releases it on guard drop.
struct Gate {
    permits: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    fn new(max: usize) -> Gate {
        Gate {
            permits: Mutex::new(max.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut permits = self.permits.lock().expect("gate lock");
        while *permits == 0 {
            permits = self.freed.wait(permits).expect("gate wait");
        }
        *permits -= 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.gate.permits.lock().expect("gate lock");
        *permits += 1;
        self.gate.freed.notify_one();
    }
}

/// Retry policy: total attempt count and base backoff delay (doubled
/// after each failed attempt).
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

/// Provider backed by an OpenAI-compatible HTTP endpoint. One instance
/// serves as both an [`Embedder`] and a [`Completer`], depending on which
/// trait the caller uses.
pub struct HttpProvider {
    endpoint: String,
    model: String,
    api_key_env: Option<String>,
    dimension: Option<usize>,
    max_input_chars: usize,
    retry: RetryPolicy,
    client: reqwest::blocking::Client,
    gate: Gate,
}

/// What a failed attempt means for the retry loop.
enum AttemptError {
    /// Worth retrying: network failure, timeout, 5xx, or 429.
    Transient(String),
    /// Not worth retrying: other status codes, malformed responses.
    Fatal(String),
}

impl HttpProvider {
    pub fn new(endpoint: &str, model: &str) -> Result<HttpProvider, ProviderError> {
        HttpProvider::with_options(
            endpoint,
            model,
            None,
            None,
            Duration::from_secs(30),
            8,
            RetryPolicy::default(),
        )
    }

    /// Full constructor. `api_key_env` is the *name* of the environment
    /// variable holding the bearer token; `dimension` is required when the
    /// instance will be used for embeddings.
    pub fn with_options(
        endpoint: &str,
        model: &str,
        api_key_env: Option<&str>,
        dimension: Option<usize>,
        timeout: Duration,
        max_in_flight: usize,
        retry: RetryPolicy,
    ) -> Result<HttpProvider, ProviderError> {
        if !(endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
            return Err(ProviderError::ProviderFailure(format!(
                "endpoint must be an http(s) URL, got `{endpoint}`"
            )));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::ProviderFailure(format!("client init: {e}")))?;
        Ok(HttpProvider {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key_env: api_key_env.map(str::to_string),
            dimension,
            max_input_chars: 100_000,
            retry,
            client,
            gate: Gate::new(max_in_flight),
        })
    }

    fn bearer_token(&self) -> Result<Option<String>, ProviderError> {
        match &self.api_key_env {
            None => Ok(None),
            Some(name) => match std::env::var(name) {
                Ok(v) if !v.trim().is_empty() => Ok(Some(v)),
                _ => Err(ProviderError::ProviderFailure(format!(
                    "environment variable `{name}` is not set or empty"
                ))),
            },
        }
    }

    fn attempt<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        url: &str,
        body: &Req,
        token: Option<&str>,
    ) -> Result<Resp, AttemptError> {
        let mut req = self.client.post(url).json(body);
        if let Some(token) = token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                AttemptError::Transient(format!("timeout: {e}"))
            } else {
                AttemptError::Transient(format!("network: {e}"))
            }
        })?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(AttemptError::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let detail = resp.text().unwrap_or_default();
            return Err(AttemptError::Fatal(format!(
                "HTTP {status}: {}",
                detail.chars().take(200).collect::<String>()
            )));
        }
        resp.json::<Resp>()
            .map_err(|e| AttemptError::Fatal(format!("response decode: {e}")))
    }

    fn send<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        body: &Req,
    ) -> Result<Resp, ProviderError> {
        let token = self.bearer_token()?;
        let url = format!("{}{}", self.endpoint, path);
        let _permit = self.gate.acquire();
        let mut delay = self.retry.base_delay;
        let attempts = self.retry.attempts.max(1);
        for attempt in 1..=attempts {
            match self.attempt(&url, body, token.as_deref()) {
                Ok(resp) => return Ok(resp),
                Err(AttemptError::Fatal(msg)) => {
                    return Err(ProviderError::ProviderFailure(msg));
                }
                Err(AttemptError::Transient(msg)) => {
                    if attempt == attempts {
                        return Err(ProviderError::ProviderFailure(format!(
                            "{msg} (after {attempts} attempts)"
                        )));
                    }
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
        unreachable!("retry loop returns on last attempt")
    }
}

#[derive(Serialize)]
struct EmbeddingsRequest<'a> {
    model: &'a str,
    input: &'a [String],
}

#[derive(Deserialize)]
struct EmbeddingsResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: usize,
    embedding: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ChatMessage {
    role: String,
    content: String,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage>,
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

impl Embedder for HttpProvider {
    fn dimension(&self) -> usize {
        self.dimension.unwrap_or(0)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::ProviderFailure(
                "embed called with no texts".to_string(),
            ));
        }
        for t in texts {
            let len = t.chars().count();
            if len > self.max_input_chars {
                return Err(ProviderError::InputTooLong {
                    len,
                    limit: self.max_input_chars,
                });
            }
        }
        let req = EmbeddingsRequest {
            model: &self.model,
            input: texts,
        };
        let resp: EmbeddingsResponse = self.send("/v1/embeddings", &req)?;
        if resp.data.len() != texts.len() {
            return Err(ProviderError::ProviderFailure(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                resp.data.len()
            )));
        }
        let mut data = resp.data;
        data.sort_by_key(|d| d.index);
        if let Some(dim) = self.dimension {
            for d in &data {
                if d.embedding.len() != dim {
                    return Err(ProviderError::ProviderFailure(format!(
                        "embedding dimension {} does not match configured {}",
                        d.embedding.len(),
                        dim
                    )));
                }
            }
        }
        Ok(data
            .into_iter()
            .map(|d| EmbeddingVector::new(d.embedding))
            .collect())
    }
}

impl Completer for HttpProvider {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        if prompt.is_empty() {
            return Err(ProviderError::ProviderFailure(
                "empty prompt".to_string(),
            ));
        }
        let req = ChatRequest {
            model: &self.model,
            messages: vec![ChatMessage {
                role: "user".to_string(),
                content: prompt.to_string(),
            }],
            temperature: 0.0,
        };
        let resp: ChatResponse = self.send("/v1/chat/completions", &req)?;
        let text = resp
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .unwrap_or_default();
        if text.is_empty() {
            return Err(ProviderError::EmptyCompletion);
        }
        Ok(text)
    }
}
