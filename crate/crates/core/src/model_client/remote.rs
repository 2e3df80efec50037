//! Blocking chat-completion client with retry, caching and a per-endpoint
//! concurrency bound.
//!
//! Request body:
//! `{"model": .., "messages": [{"role": .., "content": ..}], "temperature": .., "max_tokens": ..}`
//! posted to `{base_url}/chat/completions` with `Authorization: Bearer <token>`.
//! The reply text is `choices[0].message.content`.

use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::cache::{request_digest, CacheEntry, ResponseCache};
use super::{Agent, AgentRequest, AgentResponse, ClientError, EndpointConfig};
use crate::prompting::Message;

#[derive(Debug, Clone, PartialEq)]
pub enum TransportError {
    Timeout(String),
    Other(String),
}

/// Sends one JSON POST and returns status and body.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: &str, body: &Value, timeout: Duration) -> Result<(u16, String), TransportError>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self, ClientError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn post_json(&self, url: &str, bearer: &str, body: &Value, timeout: Duration) -> Result<(u16, String), TransportError> {
        let result = self.client.post(url).bearer_auth(bearer).json(body).timeout(timeout).send();
        let response = result.map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout(e.to_string())
            } else {
                TransportError::Other(e.to_string())
            }
        })?;
        let status = response.status().as_u16();
        let text = response.text().map_err(|e| TransportError::Other(e.to_string()))?;
        Ok((status, text))
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Self { free: Mutex::new(n), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

fn is_transient(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

/// Extract `choices[0].message.content`.
pub fn parse_completion(body: &str) -> Result<String, ClientError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ClientError::MalformedResponse(e.to_string()))?;
    match v.pointer("/choices/0/message/content").and_then(Value::as_str) {
        Some(text) if !text.trim().is_empty() => Ok(text.to_string()),
        Some(_) => Err(ClientError::MalformedResponse("empty completion".into())),
        None => Err(ClientError::MalformedResponse("missing choices[0].message.content".into())),
    }
}

pub struct RemoteClient {
    config: EndpointConfig,
    transport: Arc<dyn Transport>,
    cache: Option<Arc<ResponseCache>>,
    gate: Arc<Gate>,
    cache_only: bool,
}

impl RemoteClient {
    pub fn new(config: EndpointConfig) -> Result<Self, ClientError> {
        let transport = Arc::new(HttpTransport::new()?);
        Self::with_transport(config, transport)
    }

    pub fn with_transport(config: EndpointConfig, transport: Arc<dyn Transport>) -> Result<Self, ClientError> {
        config.validate()?;
        let cache = match &config.cache_dir {
            Some(dir) => Some(Arc::new(ResponseCache::open(dir)?)),
            None => None,
        };
        Ok(Self { gate: Arc::new(Gate::new(config.parallelism)), config, transport, cache, cache_only: false })
    }

    /// Serve from the cache only; misses become [`ClientError::OfflineMiss`].
    pub fn cache_only(mut self) -> Self {
        self.cache_only = true;
        self
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn cache(&self) -> Option<&ResponseCache> {
        self.cache.as_deref()
    }

    pub fn query(&self, prompt: &crate::prompting::RenderedPrompt) -> Result<AgentResponse, ClientError> {
        self.query_messages(&prompt.messages, "")
    }

    /// Send `messages`. `salt` only enters the cache key.
    pub fn query_messages(&self, messages: &[Message], salt: &str) -> Result<AgentResponse, ClientError> {
        let started = Instant::now();
        if messages.iter().all(|m| m.content.trim().is_empty()) {
            return Err(ClientError::Config("empty prompt".into()));
        }
        let c = &self.config;
        let digest = request_digest(&c.base_url, &c.model_name, c.temperature, messages, salt);
        if let Some(hit) = self.cache.as_ref().and_then(|cache| cache.get(&digest)) {
            return Ok(AgentResponse { text: hit.text, from_cache: true, latency: started.elapsed(), attempt_count: 0 });
        }
        if self.cache_only {
            return Err(ClientError::OfflineMiss(digest));
        }
        let token = std::env::var(&c.auth_env_var).map_err(|_| ClientError::AuthMissing(c.auth_env_var.clone()))?;

        let body = json!({
            "model": c.model_name,
            "messages": messages,
            "temperature": c.temperature,
            "max_tokens": c.max_tokens,
        });
        let url = format!("{}/chat/completions", c.base_url.trim_end_matches('/'));
        let mut last = String::new();
        for attempt in 1..=c.retry.max_attempts {
            if attempt > 1 {
                std::thread::sleep(c.retry.backoff(attempt - 1));
            }
            let outcome = {
                let _permit = self.gate.acquire();
                self.transport.post_json(&url, &token, &body, c.timeout())
            };
            match outcome {
                Ok((200..=299, text)) => {
                    let completion = parse_completion(&text)?;
                    if let Some(cache) = &self.cache {
                        cache.put(&CacheEntry { digest, model_name: c.model_name.clone(), text: completion.clone() })?;
                    }
                    return Ok(AgentResponse {
                        text: completion,
                        from_cache: false,
                        latency: started.elapsed(),
                        attempt_count: attempt,
                    });
                }
                Ok((status, text)) if is_transient(status) => {
                    tracing::warn!(status, attempt, "transient HTTP status, retrying");
                    last = format!("HTTP {status}: {text}");
                }
                Ok((status, text)) => return Err(ClientError::Http { status, body: text }),
                Err(TransportError::Timeout(e)) => {
                    tracing::warn!(attempt, error = %e, "request timed out, retrying");
                    last = format!("timeout: {e}");
                }
                Err(TransportError::Other(e)) => return Err(ClientError::Transport(e)),
            }
        }
        Err(ClientError::RetriesExhausted { attempts: c.retry.max_attempts, last })
    }
}

impl Agent for RemoteClient {
    fn name(&self) -> String {
        self.config.model_name.clone()
    }

    fn respond(&self, request: &AgentRequest<'_>) -> Result<AgentResponse, ClientError> {
        self.query(request.prompt)
    }

    fn parallelism(&self) -> usize {
        self.config.parallelism
    }
}
