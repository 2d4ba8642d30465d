//! Chat-completion boundary.
//!
//! Every model interaction in the crate goes through [`ChatProvider`]. The real
//! provider speaks a chat-completions JSON dialect over HTTPS ([`HttpProvider`]);
//! [`MockProvider`] answers deterministically from `(seed, request)` so the rest
//! of the crate can be exercised offline. [`Gateway`] bounds in-flight requests.

mod capture;
mod http;
mod mock;
mod wire;

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use capture::{CaptureProvider, ScriptedTranscript, TranscriptEntry};
pub use http::{HttpProvider, HttpReply, ReqwestTransport, Transport};
pub use mock::{ItemCue, MockBehaviour, MockProvider, MpiAnswererConfig, PlannerConfig, PlannerCue, TraitCue};

/// Sampling temperature used for every trial unless overridden.
pub const DEFAULT_TEMPERATURE: f64 = 0.7;
pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
/// Environment variable holding the API credential.
pub const API_KEY_ENV: &str = "SANDMAN_API_KEY";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl GatewayError {
    /// Errors that a later attempt might not hit (network, rate limiting,
    /// garbled payloads), as opposed to configuration problems.
    pub fn is_transient(&self) -> bool {
        matches!(self, GatewayError::RateLimited { .. } | GatewayError::Transport(_) | GatewayError::Malformed(_))
    }
}

/// A single-shot chat request.
///
/// `replicate` and `attempt` never go on the wire. They distinguish repeated
/// identical prompts (the n-th sample, the k-th retry) so that seeded mocks
/// can vary their answers while staying a pure function of the request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_message: Option<String>,
    pub user_message: String,
    pub temperature: f64,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(default)]
    pub replicate: u64,
    #[serde(default)]
    pub attempt: u32,
}

impl ChatRequest {
    pub fn new(user_message: impl Into<String>) -> Self {
        Self {
            system_message: None,
            user_message: user_message.into(),
            temperature: DEFAULT_TEMPERATURE,
            model_id: DEFAULT_MODEL.to_string(),
            max_tokens: None,
            replicate: 0,
            attempt: 0,
        }
    }

    pub fn with_system(mut self, system: impl Into<String>) -> Self {
        self.system_message = Some(system.into());
        self
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model_id = model.into();
        self
    }

    pub fn with_max_tokens(mut self, n: u32) -> Self {
        self.max_tokens = Some(n);
        self
    }

    pub fn with_replicate(mut self, replicate: u64) -> Self {
        self.replicate = replicate;
        self
    }

    pub fn with_attempt(mut self, attempt: u32) -> Self {
        self.attempt = attempt;
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.user_message.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("user message is empty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(GatewayError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if self.model_id.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("model id is empty".into()));
        }
        if self.max_tokens == Some(0) {
            return Err(GatewayError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub prompt_tokens: u32,
    pub completion_tokens: u32,
    pub latency_ms: u64,
}

impl ChatResponse {
    pub fn latency(&self) -> Duration {
        Duration::from_millis(self.latency_ms)
    }
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;

    /// Upper bound on useful concurrent calls. Order-sensitive providers
    /// (scripted replay) return 1.
    fn max_parallelism(&self) -> usize {
        usize::MAX
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for Arc<P> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }

    fn max_parallelism(&self) -> usize {
        (**self).max_parallelism()
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for Box<P> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }

    fn max_parallelism(&self) -> usize {
        (**self).max_parallelism()
    }
}

/// Connection settings for [`HttpProvider`].
#[derive(Clone, PartialEq)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub retry_budget: u32,
    pub backoff_base: Duration,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            endpoint: DEFAULT_ENDPOINT.to_string(),
            api_key: None,
            timeout: Duration::from_secs(60),
            retry_budget: 3,
            backoff_base: Duration::from_millis(500),
        }
    }
}

impl ProviderConfig {
    /// Default settings with the credential taken from [`API_KEY_ENV`].
    pub fn from_env() -> Self {
        Self { api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()), ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.timeout.is_zero() {
            return Err(GatewayError::InvalidRequest("timeout must be positive".into()));
        }
        if self.endpoint.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("endpoint is empty".into()));
        }
        Ok(())
    }
}

impl std::fmt::Debug for ProviderConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProviderConfig")
            .field("endpoint", &self.endpoint)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("timeout", &self.timeout)
            .field("retry_budget", &self.retry_budget)
            .field("backoff_base", &self.backoff_base)
            .finish()
    }
}

struct Semaphore {
    available: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Self { available: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.cv.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Default bound on in-flight requests.
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

/// Validating, concurrency-bounded front for any provider.
pub struct Gateway {
    inner: Box<dyn ChatProvider>,
    bound: usize,
    permits: Semaphore,
}

impl Gateway {
    pub fn new(provider: impl ChatProvider + 'static, max_in_flight: usize) -> Self {
        let bound = max_in_flight.max(1);
        Self { inner: Box::new(provider), bound, permits: Semaphore::new(bound) }
    }
}

impl ChatProvider for Gateway {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let _permit = self.permits.acquire();
        self.inner.complete(request)
    }

    fn max_parallelism(&self) -> usize {
        self.bound.min(self.inner.max_parallelism())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Slow {
        live: AtomicUsize,
        peak: AtomicUsize,
    }

    impl ChatProvider for Slow {
        fn complete(&self, _: &ChatRequest) -> Result<ChatResponse, GatewayError> {
            let now = self.live.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(15));
            self.live.fetch_sub(1, Ordering::SeqCst);
            Ok(ChatResponse { text: "ok".into(), prompt_tokens: 0, completion_tokens: 0, latency_ms: 0 })
        }
    }

    #[test]
    fn gateway_bounds_in_flight_requests() {
        let slow = Arc::new(Slow { live: AtomicUsize::new(0), peak: AtomicUsize::new(0) });
        let gw = Gateway::new(slow.clone(), 3);
        std::thread::scope(|s| {
            for _ in 0..12 {
                s.spawn(|| gw.complete(&ChatRequest::new("hi")).unwrap());
            }
        });
        assert!(slow.peak.load(Ordering::SeqCst) <= 3);
        assert_eq!(gw.max_parallelism(), 3);
    }

    #[test]
    fn request_validation() {
        assert!(ChatRequest::new("x").validate().is_ok());
        assert!(ChatRequest::new("  ").validate().is_err());
        assert!(ChatRequest::new("x").with_temperature(2.5).validate().is_err());
        assert!(ChatRequest::new("x").with_max_tokens(0).validate().is_err());
        assert_eq!(ChatRequest::new("x").temperature, 0.7);
    }

    #[test]
    fn config_debug_redacts_key() {
        let cfg = ProviderConfig { api_key: Some("sk-secret".into()), ..Default::default() };
        assert!(!format!("{cfg:?}").contains("sk-secret"));
    }
}
