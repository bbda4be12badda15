//! Chat-completions wire types and the HTTP backend.

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::ModelConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(default = "one")]
    pub n: u32,
}

fn one() -> u32 {
    1
}

impl ChatRequest {
    pub fn from_prompt(prompt: &str, cfg: &ModelConfig) -> ChatRequest {
        ChatRequest {
            model: cfg.model_name.clone(),
            messages: vec![ChatMessage::user(prompt)],
            temperature: cfg.temperature,
            max_tokens: Some(cfg.max_output_tokens),
            n: 1,
        }
    }

    /// Content of the last user message.
    pub fn prompt(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == "user")
            .map_or("", |m| m.content.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatChoice {
    pub index: u32,
    pub message: ChatMessage,
    #[serde(default)]
    pub finish_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    #[serde(default)]
    pub id: String,
    #[serde(default)]
    pub object: String,
    #[serde(default)]
    pub model: String,
    pub choices: Vec<ChatChoice>,
}

impl ChatResponse {
    pub fn from_content(model: &str, content: String) -> ChatResponse {
        ChatResponse {
            id: "chatcmpl-local".into(),
            object: "chat.completion".into(),
            model: model.to_string(),
            choices: vec![ChatChoice {
                index: 0,
                message: ChatMessage {
                    role: "assistant".into(),
                    content,
                },
                finish_reason: Some("stop".into()),
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RequestError {
    #[error("request timed out")]
    Timeout,
    #[error("HTTP {status}: {body}")]
    HttpStatus { status: u16, body: String },
    #[error("authentication failed: {message}")]
    Auth { message: String },
    #[error("rate limited by endpoint")]
    RateLimited { retry_after_secs: Option<u64> },
    #[error("transport error: {message}")]
    Transport { message: String },
    #[error("malformed response: {message}")]
    InvalidResponse { message: String },
}

impl RequestError {
    pub fn is_retryable(&self) -> bool {
        match self {
            RequestError::Timeout
            | RequestError::RateLimited { .. }
            | RequestError::Transport { .. } => true,
            RequestError::HttpStatus { status, .. } => *status >= 500,
            RequestError::Auth { .. } | RequestError::InvalidResponse { .. } => false,
        }
    }
}

/// Anything that answers a chat request with the assistant's message text.
#[async_trait]
pub trait ChatBackend: Send + Sync {
    async fn complete(&self, request: &ChatRequest) -> Result<String, RequestError>;
}

/// Sends one prompt and returns the model's message content verbatim.
pub async fn generate_one(
    backend: &dyn ChatBackend,
    prompt: &str,
    cfg: &ModelConfig,
) -> Result<String, RequestError> {
    backend
        .complete(&ChatRequest::from_prompt(prompt, cfg))
        .await
}

/// Backend for any endpoint speaking the chat-completions convention.
pub struct HttpChatClient {
    client: reqwest::Client,
    url: String,
    api_key_env: String,
}

impl HttpChatClient {
    /// `endpoint_url` may be the full `.../chat/completions` URL or an API
    /// base such as `http://host:8000/v1`.
    pub fn new(cfg: &ModelConfig) -> Result<HttpChatClient, RequestError> {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| RequestError::Transport {
                message: e.to_string(),
            })?;
        let base = cfg.endpoint_url.trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        };
        Ok(HttpChatClient {
            client,
            url,
            api_key_env: cfg.api_key_env.clone(),
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn api_key(&self) -> Result<Option<String>, RequestError> {
        if self.api_key_env.is_empty() {
            return Ok(None);
        }
        match std::env::var(&self.api_key_env) {
            Ok(key) if !key.trim().is_empty() => Ok(Some(key)),
            _ => Err(RequestError::Auth {
                message: format!("environment variable {} is not set", self.api_key_env),
            }),
        }
    }
}

#[async_trait]
impl ChatBackend for HttpChatClient {
    async fn complete(&self, request: &ChatRequest) -> Result<String, RequestError> {
        let key = self.api_key()?;
        let mut builder = self.client.post(&self.url).json(request);
        if let Some(key) = key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().await.map_err(|e| {
            if e.is_timeout() {
                RequestError::Timeout
            } else {
                RequestError::Transport {
                    message: e.to_string(),
                }
            }
        })?;
        let status = response.status().as_u16();
        if status == 429 {
            let retry_after_secs = response
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse().ok());
            return Err(RequestError::RateLimited { retry_after_secs });
        }
        let body = response.text().await.map_err(|e| {
            if e.is_timeout() {
                RequestError::Timeout
            } else {
                RequestError::Transport {
                    message: e.to_string(),
                }
            }
        })?;
        match status {
            200..=299 => {}
            401 | 403 => {
                return Err(RequestError::Auth {
                    message: truncate(&body, 300),
                })
            }
            _ => {
                return Err(RequestError::HttpStatus {
                    status,
                    body: truncate(&body, 300),
                })
            }
        }
        let parsed: ChatResponse =
            serde_json::from_str(&body).map_err(|e| RequestError::InvalidResponse {
                message: e.to_string(),
            })?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| RequestError::InvalidResponse {
                message: "response has no choices".into(),
            })
    }
}

fn truncate(text: &str, max_chars: usize) -> String {
    if text.chars().count() <= max_chars {
        text.to_string()
    } else {
        let mut out: String = text.chars().take(max_chars).collect();
        out.push('…');
        out
    }
}
