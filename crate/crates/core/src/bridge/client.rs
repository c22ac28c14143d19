use std::fmt;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEndpoint {
    /// e.g. `https://api.example.com/v1`; `/chat/completions` is appended.
    pub base_url: String,
    pub model_id: String,
    /// Name of the environment variable holding the credential. Empty
    /// means the endpoint takes no credential.
    #[serde(default)]
    pub auth_token_env: String,
    #[serde(default = "default_request_timeout")]
    pub request_timeout_s: f64,
}

fn default_request_timeout() -> f64 {
    120.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop: Vec<String>,
    pub extra_template: Option<String>,
    /// Used instead of 0 when the endpoint refuses greedy decoding.
    pub min_temperature: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            temperature: 0.0,
            max_tokens: 2048,
            stop: Vec::new(),
            extra_template: None,
            min_temperature: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BridgeSettings {
    pub max_concurrency: usize,
    pub max_retries: u32,
    /// First retry delay; doubles on every further attempt.
    pub backoff_ms: u64,
}

impl Default for BridgeSettings {
    fn default() -> Self {
        BridgeSettings {
            max_concurrency: 4,
            max_retries: 3,
            backoff_ms: 500,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BridgeError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("request timed out after {0} attempts")]
    Timeout(u32),
    #[error("rate limited after {0} attempts")]
    RateLimited(u32),
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl BridgeError {
    pub fn is_config(&self) -> bool {
        matches!(self, BridgeError::Config(_))
    }
}

/// Metadata kept for the run log next to the response text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub latency_ms: f64,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub retries: u32,
    pub temperature: f64,
    pub greedy: bool,
}

struct Secret(String);

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<redacted>")
    }
}

#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct GateGuard<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Gate {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        GateGuard(self)
    }
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// A chat-completions client shared by all workers.
#[derive(Debug)]
pub struct Client {
    endpoint: ModelEndpoint,
    settings: BridgeSettings,
    token: Option<Secret>,
    agent: ureq::Agent,
    gate: Gate,
}

enum Attempt {
    Done(u16, String),
    Retry(BridgeError),
}

impl Client {
    /// Checks the endpoint and reads the credential; no network traffic.
    pub fn new(endpoint: ModelEndpoint, settings: BridgeSettings) -> Result<Self, BridgeError> {
        let url = endpoint.base_url.as_str();
        if !(url.starts_with("http://") || url.starts_with("https://")) || url.len() <= "https://".len() {
            return Err(BridgeError::Config(format!("base_url must be an absolute http(s) URL, got {url:?}")));
        }
        if endpoint.model_id.is_empty() {
            return Err(BridgeError::Config("model_id is empty".into()));
        }
        if endpoint.request_timeout_s.is_nan() || endpoint.request_timeout_s <= 0.0 {
            return Err(BridgeError::Config("request_timeout_s must be positive".into()));
        }
        let token = if endpoint.auth_token_env.is_empty() {
            None
        } else {
            match std::env::var(&endpoint.auth_token_env) {
                Ok(t) if !t.is_empty() => Some(Secret(t)),
                _ => {
                    return Err(BridgeError::Config(format!(
                        "credential variable {} is not set",
                        endpoint.auth_token_env
                    )))
                }
            }
        };
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(endpoint.request_timeout_s)))
            .http_status_as_error(false)
            .build();
        Ok(Client {
            gate: Gate::new(settings.max_concurrency),
            agent: ureq::Agent::new_with_config(config),
            endpoint,
            settings,
            token,
        })
    }

    pub fn endpoint(&self) -> &ModelEndpoint {
        &self.endpoint
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.endpoint.base_url.trim_end_matches('/'))
    }

    fn body(&self, prompt: &str, params: &GenParams, temperature: f64) -> Json {
        let mut body = json!({
            "model": self.endpoint.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "max_tokens": params.max_tokens,
        });
        if !params.stop.is_empty() {
            body["stop"] = json!(params.stop);
        }
        body
    }

    fn attempt(&self, body: &Json) -> Attempt {
        let mut req = self.agent.post(self.url()).header("Content-Type", "application/json");
        if let Some(Secret(t)) = &self.token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        match req.send_json(body) {
            Ok(resp) => {
                let status = resp.status().as_u16();
                match resp.into_body().read_to_string() {
                    Ok(text) => Attempt::Done(status, text),
                    Err(e) => Attempt::Retry(BridgeError::Transport { attempts: 0, message: e.to_string() }),
                }
            }
            Err(ureq::Error::Timeout(_)) => Attempt::Retry(BridgeError::Timeout(0)),
            Err(e) => Attempt::Retry(BridgeError::Transport { attempts: 0, message: e.to_string() }),
        }
    }

    /// One user-message request, retried with exponential backoff on
    /// transport faults, 429 and 5xx.
    pub fn request_completion(&self, prompt: &str, params: &GenParams) -> Result<Completion, BridgeError> {
        let _slot = self.gate.acquire();
        let mut temperature = params.temperature;
        let mut greedy = temperature == 0.0;
        let mut retries = 0u32;
        let started = Instant::now();
        loop {
            let body = self.body(prompt, params, temperature);
            let failure = match self.attempt(&body) {
                Attempt::Done(200..=299, text) => {
                    let completion = parse_completion(&text, started, retries, temperature, greedy)?;
                    log::info!(
                        "model={} latency_ms={:.0} retries={} prompt_tokens={:?} completion_tokens={:?}",
                        self.endpoint.model_id,
                        completion.latency_ms,
                        retries,
                        completion.prompt_tokens,
                        completion.completion_tokens
                    );
                    return Ok(completion);
                }
                Attempt::Done(status @ (401 | 403), _) => return Err(BridgeError::Auth(status)),
                Attempt::Done(400, text) if greedy && temperature == 0.0 && text.to_ascii_lowercase().contains("temperature") => {
                    log::warn!("endpoint refused temperature 0, sampling at {}", params.min_temperature);
                    temperature = params.min_temperature;
                    greedy = false;
                    continue;
                }
                Attempt::Done(429, _) => BridgeError::RateLimited(0),
                Attempt::Done(status @ 500..=599, text) => BridgeError::Http { status, body: text },
                Attempt::Done(status, text) => return Err(BridgeError::Http { status, body: text }),
                Attempt::Retry(e) => e,
            };
            if retries >= self.settings.max_retries {
                let attempts = retries + 1;
                return Err(match failure {
                    BridgeError::Timeout(_) => BridgeError::Timeout(attempts),
                    BridgeError::RateLimited(_) => BridgeError::RateLimited(attempts),
                    BridgeError::Transport { message, .. } => BridgeError::Transport { attempts, message },
                    other => other,
                });
            }
            let delay = self.settings.backoff_ms.saturating_mul(1u64 << retries.min(16));
            log::warn!("retrying after {failure} in {delay} ms");
            std::thread::sleep(Duration::from_millis(delay));
            retries += 1;
        }
    }
}

fn parse_completion(text: &str, started: Instant, retries: u32, temperature: f64, greedy: bool) -> Result<Completion, BridgeError> {
    let v: Json = serde_json::from_str(text).map_err(|e| BridgeError::Malformed(e.to_string()))?;
    let content = v["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| BridgeError::Malformed("no choices[0].message.content".into()))?;
    Ok(Completion {
        text: content.to_string(),
        latency_ms: started.elapsed().as_secs_f64() * 1000.0,
        prompt_tokens: v["usage"]["prompt_tokens"].as_u64(),
        completion_tokens: v["usage"]["completion_tokens"].as_u64(),
        retries,
        temperature,
        greedy,
    })
}
