//! Text generation behind one interface: a chat-completions HTTP client and
//! a deterministic rule-based stand-in.

pub mod http;
pub mod scripted;

pub use http::HttpBackend;
pub use scripted::{
    scripted_generate, Condition, Heuristic, ResponseTemplate, Rule, ScriptedBackend,
    ScriptedRuleSet,
};

use serde::{Deserialize, Serialize};

/// Returned in place of model text once every attempt has failed. Parsers
/// find no JSON in it and fall back to their no-op defaults.
pub const FAILURE_SENTINEL: &str = "<<LGT_BACKEND_FAILURE>>";

/// System message sent with every request; the role text itself is part of
/// the user message.
pub const SYSTEM_TEXT: &str =
    "You are one agent of an automated neural-network tuning loop. Reply with exactly one JSON object as instructed.";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BackendError {
    #[error("http backend needs a non-empty endpoint url")]
    MissingEndpoint,
    #[error("environment variable `{0}` with the API key is not set")]
    MissingApiKey(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid scripted rule set: {0}")]
    InvalidRules(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub model_name: String,
}

impl GenerationRequest {
    pub fn new(
        system_text: impl Into<String>,
        user_text: impl Into<String>,
        config: &BackendConfig,
    ) -> Result<Self, BackendError> {
        let request = Self {
            system_text: system_text.into(),
            user_text: user_text.into(),
            temperature: config.temperature,
            max_tokens: config.max_tokens,
            model_name: config.model_name.clone(),
        };
        request.check()?;
        Ok(request)
    }

    pub fn check(&self) -> Result<(), BackendError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(BackendError::InvalidRequest(format!(
                "temperature {} must be finite and >= 0",
                self.temperature
            )));
        }
        if self.max_tokens < 1 {
            return Err(BackendError::InvalidRequest("max_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Http,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint_url: String,
    pub api_key_env_name: String,
    pub model_name: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Rules for the scripted backend; the built-in set when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rules: Option<ScriptedRuleSet>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Scripted,
            endpoint_url: String::new(),
            api_key_env_name: "LGT_API_KEY".into(),
            model_name: "deepseek-chat".into(),
            timeout_ms: 60_000,
            max_retries: 2,
            retry_backoff_ms: 500,
            temperature: 0.2,
            max_tokens: 1024,
            rules: None,
        }
    }
}

impl BackendConfig {
    pub fn scripted() -> Self {
        Self::default()
    }

    /// Builds the backend, failing fast on missing endpoint or key.
    pub fn build(&self) -> Result<Box<dyn Backend>, BackendError> {
        match self.kind {
            BackendKind::Scripted => {
                let rules = match &self.rules {
                    Some(r) => {
                        r.check()?;
                        r.clone()
                    }
                    None => ScriptedRuleSet::default_rules(),
                };
                Ok(Box::new(ScriptedBackend::new(rules)))
            }
            BackendKind::Http => Ok(Box::new(HttpBackend::from_config(self)?)),
        }
    }
}

/// Text plus what it took to get it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub text: String,
    pub attempts: u32,
    /// Last transport or protocol error, when the sentinel was returned.
    pub error: Option<String>,
}

impl Generation {
    pub fn ok(text: String, attempts: u32) -> Self {
        Self {
            text,
            attempts,
            error: None,
        }
    }

    pub fn failed(attempts: u32, error: String) -> Self {
        Self {
            text: FAILURE_SENTINEL.to_string(),
            attempts,
            error: Some(error),
        }
    }

    pub fn is_failure(&self) -> bool {
        self.error.is_some()
    }
}

pub trait Backend: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Generation;

    /// Short description recorded in run records.
    fn describe(&self) -> String;
}

/// Backend that always fails; useful for exercising fallbacks.
#[derive(Debug, Clone, Copy, Default)]
pub struct FailingBackend;

impl Backend for FailingBackend {
    fn generate(&self, _request: &GenerationRequest) -> Generation {
        Generation::failed(1, "backend disabled".into())
    }

    fn describe(&self) -> String {
        "failing".into()
    }
}
