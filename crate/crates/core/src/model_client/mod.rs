//! Agents: remote chat-completion endpoints and simulated agents.

pub mod cache;
pub mod remote;
pub mod simulated;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use cache::ResponseCache;
pub use remote::{HttpTransport, RemoteClient, Transport, TransportError};
pub use simulated::{detect_features, Feature, SimulatedAgent, SimulatedAgentSpec};

use crate::generator::ProblemInstance;
use crate::perturbation::ArmLabel;
use crate::prompting::RenderedPrompt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 5, backoff_base_ms: 500, backoff_max_ms: 30_000 }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based).
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64 << attempt.saturating_sub(1).min(20);
        Duration::from_millis(self.backoff_base_ms.saturating_mul(factor).min(self.backoff_max_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    /// Root of an OpenAI-compatible API; `/chat/completions` is appended.
    pub base_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Environment variable holding the bearer token.
    pub auth_env_var: String,
    pub parallelism: usize,
    pub timeout_secs: f64,
    pub retry: RetryPolicy,
    /// Response cache location; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model_name: "gpt-4o".into(),
            temperature: 0.0,
            max_tokens: 1024,
            auth_env_var: "OPENAI_API_KEY".into(),
            parallelism: 4,
            timeout_secs: 60.0,
            retry: RetryPolicy::default(),
            cache_dir: Some(PathBuf::from(".token-bias-cache")),
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), ClientError> {
        let bad = |m: &str| Err(ClientError::Config(m.to_string()));
        if self.parallelism < 1 {
            return bad("parallelism must be at least 1");
        }
        if !(self.temperature >= 0.0) {
            return bad("temperature must be non-negative");
        }
        if self.retry.max_attempts < 1 {
            return bad("retry.max_attempts must be at least 1");
        }
        if self.base_url.is_empty() || self.model_name.is_empty() {
            return bad("base_url and model_name are required");
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs.max(0.001))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentResponse {
    pub text: String,
    pub from_cache: bool,
    #[serde(with = "duration_secs")]
    pub latency: Duration,
    pub attempt_count: u32,
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?.max(0.0)))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClientError {
    #[error("environment variable {0} is not set")]
    AuthMissing(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("malformed response body: {0}")]
    MalformedResponse(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("offline mode and no cached response for digest {0}")]
    OfflineMiss(String),
    #[error("cache error: {0}")]
    Cache(String),
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
}

/// Where a query sits in an experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairContext {
    pub base_id: String,
    pub pair_index: usize,
    pub arm: ArmLabel,
}

pub struct AgentRequest<'a> {
    pub prompt: &'a RenderedPrompt,
    pub instance: &'a ProblemInstance,
    pub context: PairContext,
}

pub trait Agent: Send + Sync {
    /// Model label used in result rows.
    fn name(&self) -> String;

    fn respond(&self, request: &AgentRequest<'_>) -> Result<AgentResponse, ClientError>;

    /// Concurrent requests this agent tolerates.
    fn parallelism(&self) -> usize {
        1
    }
}

/// Agent description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AgentSpec {
    Remote(EndpointConfig),
    Simulated(SimulatedAgentSpec),
}

impl AgentSpec {
    pub fn name(&self) -> String {
        match self {
            AgentSpec::Remote(c) => c.model_name.clone(),
            AgentSpec::Simulated(s) => s.name.clone(),
        }
    }

    /// Instantiate the agent. Remote agents in offline mode only replay
    /// cached responses.
    pub fn build(&self, offline: bool) -> Result<Box<dyn Agent>, ClientError> {
        Ok(match self {
            AgentSpec::Remote(config) => {
                let mut client = RemoteClient::new(config.clone())?;
                if offline {
                    client = client.cache_only();
                }
                Box::new(client)
            }
            AgentSpec::Simulated(spec) => Box::new(SimulatedAgent::new(spec.clone())),
        })
    }
}
