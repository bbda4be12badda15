//! Quiz generation against chat-completions endpoints.

mod batch;
mod client;
mod layout;
pub mod mock;

use serde::{Deserialize, Serialize};

use crate::model::QuizSet;

pub use batch::{
    request_with_retries, run_batch, BatchError, BatchReport, BatchSummary, RateLimiter,
    RunContext, CHECKPOINT_FILE,
};
pub use client::{
    generate_one, ChatBackend, ChatChoice, ChatMessage, ChatRequest, ChatResponse, HttpChatClient,
    RequestError,
};
pub use layout::{format_json, format_lettered, parse_quiz, Expected, ParseError, ParseReason};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Name of the environment variable holding the API key. Empty means
    /// the endpoint takes no key.
    pub api_key_env: String,
    pub timeout_secs: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            endpoint_url: "mock://quiz".into(),
            model_name: "gpt-4-turbo".into(),
            temperature: 0.7,
            max_output_tokens: 2048,
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 60.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.endpoint_url.trim().is_empty() {
            return Err("endpoint_url must not be empty".into());
        }
        if self.model_name.trim().is_empty() {
            return Err("model_name must not be empty".into());
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            ));
        }
        if self.max_output_tokens == 0 {
            return Err("max_output_tokens must be positive".into());
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(format!(
                "timeout must be positive, got {}",
                self.timeout_secs
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchPolicy {
    pub max_concurrency: usize,
    pub requests_per_minute: u32,
    pub max_retries: u32,
    pub backoff_base_secs: f64,
}

impl Default for BatchPolicy {
    fn default() -> Self {
        BatchPolicy {
            max_concurrency: 4,
            requests_per_minute: 600,
            max_retries: 3,
            backoff_base_secs: 2.0,
        }
    }
}

impl BatchPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_concurrency == 0 {
            return Err("max_concurrency must be positive".into());
        }
        if self.requests_per_minute == 0 {
            return Err("requests_per_minute must be positive".into());
        }
        if !(self.backoff_base_secs >= 0.0 && self.backoff_base_secs.is_finite()) {
            return Err(format!(
                "backoff_base must be >= 0, got {}",
                self.backoff_base_secs
            ));
        }
        Ok(())
    }

    /// Delay before retry number `retry` (1-based): `base * 2^(retry-1)`,
    /// capped at five minutes.
    pub fn backoff(&self, retry: u32) -> std::time::Duration {
        let secs = self.backoff_base_secs * 2f64.powi(retry.saturating_sub(1).min(30) as i32);
        std::time::Duration::from_secs_f64(secs.min(300.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeStatus {
    Ok { quiz: QuizSet },
    ParseFailed { raw_text: String, error: ParseError },
    RequestFailed { error: RequestError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationOutcome {
    pub doc_id: String,
    pub status: OutcomeStatus,
    pub attempts: u32,
}

impl GenerationOutcome {
    pub fn quiz(&self) -> Option<&QuizSet> {
        match &self.status {
            OutcomeStatus::Ok { quiz } => Some(quiz),
            _ => None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.quiz().is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ModelConfig::default().validate().unwrap();
        BatchPolicy::default().validate().unwrap();
        let bad = ModelConfig {
            model_name: " ".into(),
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = BatchPolicy {
            max_concurrency: 0,
            ..BatchPolicy::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn backoff_doubles() {
        let p = BatchPolicy::default();
        assert_eq!(p.backoff(1).as_secs_f64(), 2.0);
        assert_eq!(p.backoff(2).as_secs_f64(), 4.0);
        assert_eq!(p.backoff(3).as_secs_f64(), 8.0);
        assert_eq!(p.backoff(40).as_secs_f64(), 300.0);
    }
}
