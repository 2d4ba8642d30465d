use std::time::{Duration, Instant};

use rand::Rng;

use super::wire::{decode_response, encode_request};
use super::{ChatProvider, ChatRequest, ChatResponse, GatewayError, ProviderConfig, API_KEY_ENV};

/// Raw HTTP outcome handed back by a [`Transport`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
    pub retry_after: Option<Duration>,
}

/// Sends one JSON POST. `Err` means the request never produced an HTTP
/// status (connection refused, timeout, TLS failure).
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: &str, body: String, timeout: Duration) -> Result<HttpReply, String>;
}

/// Blocking reqwest transport.
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| GatewayError::Transport(format!("failed to build HTTP client: {e}")))?;
        Ok(Self { client })
    }
}

impl Transport for ReqwestTransport {
    fn post_json(&self, url: &str, bearer: &str, body: String, timeout: Duration) -> Result<HttpReply, String> {
        let resp = self
            .client
            .post(url)
            .bearer_auth(bearer)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .timeout(timeout)
            .body(body)
            .send()
            .map_err(|e| if e.is_timeout() { format!("timeout: {e}") } else { e.to_string() })?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let body = resp.text().map_err(|e| e.to_string())?;
        Ok(HttpReply { status, body, retry_after })
    }
}

/// Chat-completions provider with exponential backoff on 429, 408 and 5xx
/// responses and on transport failures.
pub struct HttpProvider<T: Transport = ReqwestTransport> {
    config: ProviderConfig,
    transport: T,
}

impl HttpProvider<ReqwestTransport> {
    pub fn new(config: ProviderConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        Ok(Self { config, transport: ReqwestTransport::new()? })
    }
}

impl<T: Transport> HttpProvider<T> {
    pub fn with_transport(config: ProviderConfig, transport: T) -> Self {
        Self { config, transport }
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    fn backoff(&self, attempt: u32, hint: Option<Duration>) -> Duration {
        let exp = self.config.backoff_base.saturating_mul(1u32 << attempt.min(16));
        let half = exp / 2;
        let jitter = if half.is_zero() { Duration::ZERO } else { half.mul_f64(rand::rng().random::<f64>()) };
        let delay = half + jitter;
        hint.map_or(delay, |h| delay.max(h))
    }
}

fn snippet(body: &str) -> String {
    let s: String = body.chars().take(200).collect();
    s.replace('\n', " ")
}

impl<T: Transport> ChatProvider for HttpProvider<T> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let key =
            self.config.api_key.as_deref().ok_or_else(|| GatewayError::Auth(format!("{API_KEY_ENV} is not set")))?;
        let body = encode_request(request);
        let budget = self.config.retry_budget;
        let started = Instant::now();

        let mut attempt = 0u32;
        loop {
            let outcome = self.transport.post_json(&self.config.endpoint, key, body.clone(), self.config.timeout);
            let (retryable, hint) = match outcome {
                Err(e) => (GatewayError::Transport(e), None),
                Ok(reply) => match reply.status {
                    200..=299 => {
                        let d = decode_response(&reply.body)?;
                        return Ok(ChatResponse {
                            text: d.text,
                            prompt_tokens: d.prompt_tokens,
                            completion_tokens: d.completion_tokens,
                            latency_ms: started.elapsed().as_millis() as u64,
                        });
                    }
                    401 | 403 => {
                        return Err(GatewayError::Auth(format!("HTTP {}: {}", reply.status, snippet(&reply.body))))
                    }
                    429 => (GatewayError::RateLimited { attempts: attempt + 1 }, reply.retry_after),
                    408 | 500 | 502 | 503 | 504 => (
                        GatewayError::Transport(format!("HTTP {}: {}", reply.status, snippet(&reply.body))),
                        reply.retry_after,
                    ),
                    s => return Err(GatewayError::Transport(format!("HTTP {s}: {}", snippet(&reply.body)))),
                },
            };
            if attempt >= budget {
                return Err(match retryable {
                    GatewayError::RateLimited { .. } => GatewayError::RateLimited { attempts: attempt + 1 },
                    other => other,
                });
            }
            let delay = self.backoff(attempt, hint);
            tracing::debug!(attempt, ?delay, error = %retryable, "retrying chat request");
            std::thread::sleep(delay);
            attempt += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    struct Canned {
        replies: Mutex<Vec<Result<HttpReply, String>>>,
        bodies: Mutex<Vec<String>>,
    }

    impl Canned {
        fn new(mut replies: Vec<Result<HttpReply, String>>) -> Self {
            replies.reverse();
            Self { replies: Mutex::new(replies), bodies: Mutex::new(vec![]) }
        }
    }

    impl Transport for Canned {
        fn post_json(&self, _: &str, _: &str, body: String, _: Duration) -> Result<HttpReply, String> {
            self.bodies.lock().unwrap().push(body);
            self.replies.lock().unwrap().pop().unwrap_or_else(|| Err("no more replies".into()))
        }
    }

    fn reply(status: u16, body: &str) -> Result<HttpReply, String> {
        Ok(HttpReply { status, body: body.into(), retry_after: None })
    }

    const OK: &str =
        r#"{"choices":[{"message":{"content":"hello"}}],"usage":{"prompt_tokens":3,"completion_tokens":1}}"#;

    fn cfg(budget: u32) -> ProviderConfig {
        ProviderConfig {
            api_key: Some("k".into()),
            retry_budget: budget,
            backoff_base: Duration::from_millis(1),
            ..Default::default()
        }
    }

    #[test]
    fn retries_transient_then_succeeds() {
        let p = HttpProvider::with_transport(
            cfg(3),
            Canned::new(vec![Err("reset".into()), reply(503, ""), reply(200, OK)]),
        );
        let r = p.complete(&ChatRequest::new("hi")).unwrap();
        assert_eq!(r.text, "hello");
        assert_eq!(p.transport().bodies.lock().unwrap().len(), 3);
    }

    #[test]
    fn rate_limit_exhausts_budget() {
        let p = HttpProvider::with_transport(cfg(2), Canned::new(vec![reply(429, ""), reply(429, ""), reply(429, "")]));
        assert_eq!(p.complete(&ChatRequest::new("hi")), Err(GatewayError::RateLimited { attempts: 3 }));
    }

    #[test]
    fn auth_failure_is_not_retried() {
        let p = HttpProvider::with_transport(cfg(3), Canned::new(vec![reply(401, "bad key"), reply(200, OK)]));
        assert!(matches!(p.complete(&ChatRequest::new("hi")), Err(GatewayError::Auth(_))));
        assert_eq!(p.transport().bodies.lock().unwrap().len(), 1);
    }

    #[test]
    fn missing_key_names_env_var() {
        let p = HttpProvider::with_transport(ProviderConfig::default(), Canned::new(vec![]));
        match p.complete(&ChatRequest::new("hi")) {
            Err(GatewayError::Auth(msg)) => assert!(msg.contains(API_KEY_ENV)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undecodable_success_is_malformed() {
        let p = HttpProvider::with_transport(cfg(0), Canned::new(vec![reply(200, "not json")]));
        assert!(matches!(p.complete(&ChatRequest::new("hi")), Err(GatewayError::Malformed(_))));
    }

    #[test]
    fn backoff_grows_exponentially_within_jitter() {
        let p = HttpProvider::with_transport(
            ProviderConfig { backoff_base: Duration::from_millis(500), ..Default::default() },
            Canned::new(vec![]),
        );
        for attempt in 0..4 {
            let full = Duration::from_millis(500 * (1 << attempt));
            let d = p.backoff(attempt, None);
            assert!(d >= full / 2 && d <= full, "attempt {attempt}: {d:?}");
        }
        assert_eq!(p.backoff(0, Some(Duration::from_secs(5))), Duration::from_secs(5));
    }
}
