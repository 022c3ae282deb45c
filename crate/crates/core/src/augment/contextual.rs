//! Sentence-level rewriting through an external service, or a local stub.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::tokenize;

pub const SERVICE_URL_ENV: &str = "AUGMENT_SERVICE_URL";
pub const PARAPHRASE_PROMPT: &str = "As a software security expert, please paraphrase the following text: {text}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextualMode {
    BackTranslate,
    Paraphrase,
}

impl ContextualMode {
    pub fn name(self) -> &'static str {
        match self {
            ContextualMode::BackTranslate => "back_translate",
            ContextualMode::Paraphrase => "paraphrase",
        }
    }
}

pub trait ContextualClient: Send + Sync {
    fn rewrite(&self, text: &str, mode: ContextualMode) -> Result<String>;

    /// Short description for run metadata.
    fn describe(&self) -> String;
}

/// Deterministic, reversible token-level rewrites for hermetic runs.
///
/// Back-translation swaps adjacent token pairs (its own inverse). Paraphrase
/// rotates tokens left by `ceil(n / 2)`; rotating right by the same amount
/// restores the input. Whitespace is normalized to single spaces.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubClient;

impl StubClient {
    pub fn invert(text: &str, mode: ContextualMode) -> String {
        let mut t = tokenize(text);
        match mode {
            ContextualMode::BackTranslate => t.chunks_mut(2).for_each(|c| c.reverse()),
            ContextualMode::Paraphrase => {
                let n = t.len();
                t.rotate_right(n.div_ceil(2));
            }
        }
        t.join(" ")
    }
}

impl ContextualClient for StubClient {
    fn rewrite(&self, text: &str, mode: ContextualMode) -> Result<String> {
        let mut t = tokenize(text);
        match mode {
            ContextualMode::BackTranslate => t.chunks_mut(2).for_each(|c| c.reverse()),
            ContextualMode::Paraphrase => {
                let n = t.len();
                t.rotate_left(n.div_ceil(2));
            }
        }
        Ok(t.join(" "))
    }

    fn describe(&self) -> String {
        "stub (pair swap / half rotation)".into()
    }
}

#[derive(Serialize)]
struct AugmentRequest<'a> {
    text: &'a str,
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    prompt: Option<String>,
}

#[derive(Deserialize)]
struct AugmentResponse {
    text: String,
}

/// Client for `POST {base}/v1/augment` with bounded retries and a cap on
/// concurrent requests.
pub struct HttpClient {
    endpoint: String,
    agent: ureq::Agent,
    max_attempts: u32,
    backoff: Duration,
    in_flight: Mutex<usize>,
    slot_freed: Condvar,
    max_in_flight: usize,
}

impl HttpClient {
    pub fn new(base_url: &str, max_in_flight: usize) -> Self {
        let config = ureq::Agent::config_builder().timeout_global(Some(Duration::from_secs(60))).build();
        HttpClient {
            endpoint: format!("{}/v1/augment", base_url.trim_end_matches('/')),
            agent: ureq::Agent::new_with_config(config),
            max_attempts: 3,
            backoff: Duration::from_millis(500),
            in_flight: Mutex::new(0),
            slot_freed: Condvar::new(),
            max_in_flight: max_in_flight.max(1),
        }
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn acquire(&self) {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max_in_flight {
            n = self.slot_freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
    }

    fn release(&self) {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.slot_freed.notify_one();
    }

    fn attempt(&self, body: &AugmentRequest<'_>) -> Result<String> {
        let to_service = |e: ureq::Error| {
            let retryable = match &e {
                ureq::Error::StatusCode(code) => *code == 429 || *code >= 500,
                ureq::Error::Io(_) | ureq::Error::Timeout(_) | ureq::Error::ConnectionFailed => true,
                ureq::Error::HostNotFound => false,
                _ => false,
            };
            Error::Service { message: e.to_string(), retryable }
        };
        let mut resp = self.agent.post(&self.endpoint).send_json(body).map_err(to_service)?;
        let parsed: AugmentResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::Service { message: format!("bad response body: {e}"), retryable: false })?;
        Ok(parsed.text)
    }
}

impl ContextualClient for HttpClient {
    fn rewrite(&self, text: &str, mode: ContextualMode) -> Result<String> {
        let body = AugmentRequest {
            text,
            mode: mode.name(),
            prompt: (mode == ContextualMode::Paraphrase).then(|| PARAPHRASE_PROMPT.replace("{text}", text)),
        };
        self.acquire();
        let mut last = None;
        for attempt in 0..self.max_attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            match self.attempt(&body) {
                Ok(t) => {
                    self.release();
                    return Ok(t);
                }
                Err(Error::Service { retryable: true, message }) => {
                    log::warn!("augment service attempt {} failed: {message}", attempt + 1);
                    last = Some(message);
                }
                Err(e) => {
                    self.release();
                    return Err(e);
                }
            }
        }
        self.release();
        Err(Error::Service {
            message: format!("gave up after {} attempts: {}", self.max_attempts, last.unwrap_or_default()),
            retryable: false,
        })
    }

    fn describe(&self) -> String {
        format!("http {}", self.endpoint)
    }
}

/// HTTP client when `AUGMENT_SERVICE_URL` is set, otherwise the stub.
pub fn client_from_env(max_in_flight: usize) -> Box<dyn ContextualClient> {
    match std::env::var(SERVICE_URL_ENV) {
        Ok(url) if !url.trim().is_empty() => Box::new(HttpClient::new(url.trim(), max_in_flight)),
        _ => Box::new(StubClient),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CVE: &str = "Buffer overflow in Solaris fdformat command gives root access to local users.";

    #[test]
    fn stub_is_reversible_and_deterministic() {
        for mode in [ContextualMode::BackTranslate, ContextualMode::Paraphrase] {
            let out = StubClient.rewrite(CVE, mode).unwrap();
            assert_ne!(out, CVE);
            assert_eq!(out, StubClient.rewrite(CVE, mode).unwrap());
            assert_eq!(StubClient::invert(&out, mode), CVE);
        }
        assert_eq!(StubClient.rewrite("a b c", ContextualMode::Paraphrase).unwrap(), "c a b");
        assert_eq!(StubClient.rewrite("a b c", ContextualMode::BackTranslate).unwrap(), "b a c");
    }

    #[test]
    fn prompt_wraps_text() {
        assert_eq!(
            PARAPHRASE_PROMPT.replace("{text}", "x"),
            "As a software security expert, please paraphrase the following text: x"
        );
    }

    #[test]
    fn unreachable_service_fails_after_retries() {
        let c = HttpClient::new("http://127.0.0.1:9", 1).with_backoff(Duration::from_millis(1));
        match c.rewrite("text", ContextualMode::BackTranslate) {
            Err(Error::Service { retryable: false, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
