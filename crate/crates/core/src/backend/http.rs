use serde_json::{json, Value};
use std::time::Duration;

use super::{Backend, BackendConfig, BackendError, Generation, GenerationRequest};

/// Chat-completions client: `POST {endpoint}/chat/completions`, reply text
/// from `choices[0].message.content`.
pub struct HttpBackend {
    agent: ureq::Agent,
    url: String,
    api_key: String,
    max_retries: u32,
    retry_backoff: Duration,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("url", &self.url)
            .field("max_retries", &self.max_retries)
            .finish_non_exhaustive()
    }
}

enum AttemptError {
    Retryable(String),
    Fatal(String),
}

impl HttpBackend {
    pub fn from_config(config: &BackendConfig) -> Result<Self, BackendError> {
        let endpoint = config.endpoint_url.trim().trim_end_matches('/');
        if endpoint.is_empty() {
            return Err(BackendError::MissingEndpoint);
        }
        let api_key = std::env::var(&config.api_key_env_name)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| BackendError::MissingApiKey(config.api_key_env_name.clone()))?;
        Ok(Self::new(endpoint, api_key, config))
    }

    /// Builds a client with an explicit key (no environment lookup).
    pub fn new(endpoint: &str, api_key: String, config: &BackendConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms.max(1))))
            .http_status_as_error(false)
            .proxy(None)
            .build()
            .into();
        Self {
            agent,
            url: format!("{}/chat/completions", endpoint.trim_end_matches('/')),
            api_key,
            max_retries: config.max_retries,
            retry_backoff: Duration::from_millis(config.retry_backoff_ms),
        }
    }

    pub fn request_body(request: &GenerationRequest) -> Value {
        json!({
            "model": request.model_name,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, AttemptError> {
        let mut response = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body)
            .map_err(|e| AttemptError::Retryable(format!("transport: {e}")))?;
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(AttemptError::Retryable(format!("http status {status}")));
        }
        if !(200..300).contains(&status) {
            return Err(AttemptError::Fatal(format!("http status {status}")));
        }
        let value: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| AttemptError::Retryable(format!("unreadable body: {e}")))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| AttemptError::Retryable("response has no choices[0].message.content".into()))
    }
}

impl Backend for HttpBackend {
    fn generate(&self, request: &GenerationRequest) -> Generation {
        if let Err(e) = request.check() {
            return Generation::failed(0, e.to_string());
        }
        let body = Self::request_body(request);
        let mut last_error = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.retry_backoff * 2u32.saturating_pow(attempt - 1));
            }
            match self.attempt(&body) {
                Ok(text) => return Generation::ok(text, attempt + 1),
                Err(AttemptError::Fatal(e)) => {
                    log::warn!("generation failed without retry: {e}");
                    return Generation::failed(attempt + 1, e);
                }
                Err(AttemptError::Retryable(e)) => {
                    log::warn!("generation attempt {} failed: {e}", attempt + 1);
                    last_error = e;
                }
            }
        }
        Generation::failed(self.max_retries + 1, last_error)
    }

    fn describe(&self) -> String {
        format!("http {}", self.url)
    }
}
