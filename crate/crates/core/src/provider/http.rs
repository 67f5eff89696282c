//! Chat-completion backend over HTTP.
//!
//! Requests go to `POST {EVO_API_BASE}/chat/completions` with bearer token
//! `EVO_API_KEY` and model `EVO_MODEL`. Each call makes at most
//! [`MAX_ATTEMPTS`] attempts with exponential backoff; concurrent calls are
//! capped by an in-flight limit. Traffic can be appended to a JSON-lines log
//! with the API key redacted.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use super::{prompts, Provider, ProviderError, ProviderRequest, ProviderResponse};

pub const MAX_ATTEMPTS: u32 = 3;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;
const REDACTED: &str = "[REDACTED]";

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub base_url: String,
    pub api_key: String,
    pub model: String,
    pub request_timeout: Duration,
    /// Delay before the second attempt; doubles for each later attempt.
    pub initial_backoff: Duration,
    pub max_in_flight: usize,
}

impl HttpConfig {
    /// Read `EVO_API_BASE`, `EVO_API_KEY` and `EVO_MODEL`.
    pub fn from_env() -> Result<Self, ProviderError> {
        let var = |name: &str| {
            std::env::var(name).map_err(|_| ProviderError::InvalidArgument(format!("environment variable {name} is not set")))
        };
        Ok(HttpConfig {
            base_url: var("EVO_API_BASE")?,
            api_key: std::env::var("EVO_API_KEY").unwrap_or_default(),
            model: var("EVO_MODEL")?,
            request_timeout: Duration::from_secs(120),
            initial_backoff: Duration::from_millis(500),
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
        })
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

/// Counting semaphore for the in-flight cap.
struct Slots {
    free: Mutex<usize>,
    ready: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn new(n: usize) -> Self {
        Slots {
            free: Mutex::new(n.max(1)),
            ready: Condvar::new(),
        }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.ready.wait(free).unwrap();
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.ready.notify_one();
    }
}

pub struct HttpProvider {
    config: HttpConfig,
    agent: ureq::Agent,
    slots: Slots,
    traffic: Option<Mutex<File>>,
}

impl HttpProvider {
    pub fn new(config: HttpConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.request_timeout))
            .build()
            .into();
        HttpProvider {
            slots: Slots::new(config.max_in_flight),
            config,
            agent,
            traffic: None,
        }
    }

    /// Append every attempt to `path` as one JSON line.
    pub fn with_traffic_log(mut self, path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.traffic = Some(Mutex::new(file));
        Ok(self)
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn redact(&self, text: &str) -> String {
        if self.config.api_key.is_empty() {
            text.to_string()
        } else {
            text.replace(&self.config.api_key, REDACTED)
        }
    }

    fn log(&self, entry: Value) {
        if let Some(file) = &self.traffic {
            let line = self.redact(&entry.to_string());
            let mut f = file.lock().unwrap();
            let _ = writeln!(f, "{line}");
        }
    }

    fn attempt(&self, body: &Value) -> Result<String, String> {
        let mut request = self.agent.post(&self.config.endpoint());
        if !self.config.api_key.is_empty() {
            request = request.header("Authorization", &format!("Bearer {}", self.config.api_key));
        }
        let mut response = request.send_json(body).map_err(|e| e.to_string())?;
        let value: Value = response.body_mut().read_json().map_err(|e| e.to_string())?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| "response has no choices[0].message.content".to_string())
    }
}

impl Provider for HttpProvider {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let body = json!({
            "model": self.config.model,
            "max_tokens": request.budget,
            "messages": [
                {"role": "system", "content": prompts::SYSTEM},
                {"role": "user", "content": prompts::render(&request.payload)},
            ],
        });
        let _slot = self.slots.acquire();
        let mut backoff = self.config.initial_backoff;
        let mut last_error = String::new();
        for attempt in 1..=MAX_ATTEMPTS {
            match self.attempt(&body) {
                Ok(text) => {
                    self.log(json!({
                        "role": request.role(),
                        "attempt": attempt,
                        "prompt_version": prompts::PROMPT_VERSION,
                        "request": body,
                        "response": text,
                    }));
                    return Ok(ProviderResponse::from_text(text));
                }
                Err(e) => {
                    last_error = self.redact(&e);
                    log::warn!("provider attempt {attempt}/{MAX_ATTEMPTS} failed: {last_error}");
                    self.log(json!({
                        "role": request.role(),
                        "attempt": attempt,
                        "prompt_version": prompts::PROMPT_VERSION,
                        "request": body,
                        "error": last_error,
                    }));
                    if attempt < MAX_ATTEMPTS {
                        std::thread::sleep(backoff);
                        backoff *= 2;
                    }
                }
            }
        }
        Err(ProviderError::Unavailable {
            attempts: MAX_ATTEMPTS,
            last_error,
        })
    }

    fn kind(&self) -> &'static str {
        "http"
    }
}
