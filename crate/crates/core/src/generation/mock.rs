//! In-process stand-ins for a chat endpoint, plus a small HTTP server
//! exposing any backend under the chat-completions route.

use std::collections::VecDeque;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use tokio::net::TcpListener;

use super::client::{ChatBackend, ChatRequest, ChatResponse, HttpChatClient, RequestError};
use super::layout::format_json;
use super::ModelConfig;
use crate::model::{item_id, OptionLabel, QuizItem, QuizKind};
use crate::prompting::RenderParams;

pub const MOCK_SCHEME: &str = "mock://";

/// Builds fill-in-the-blank questions from the passage embedded in the
/// prompt. The passage is the longest block of the prompt between blank
/// lines. Output is the JSON layout and depends only on the prompt.
#[derive(Debug, Clone)]
pub struct MockQuizBackend {
    pub params: RenderParams,
}

impl MockQuizBackend {
    pub fn new(params: RenderParams) -> Self {
        MockQuizBackend { params }
    }

    pub fn respond(&self, prompt: &str) -> String {
        let passage = passage_of(prompt);
        format_json(&mock_items(passage, &self.params))
    }
}

#[async_trait]
impl ChatBackend for MockQuizBackend {
    async fn complete(&self, request: &ChatRequest) -> Result<String, RequestError> {
        Ok(self.respond(request.prompt()))
    }
}

/// Returns the prompt unchanged.
#[derive(Debug, Clone, Default)]
pub struct EchoBackend;

#[async_trait]
impl ChatBackend for EchoBackend {
    async fn complete(&self, request: &ChatRequest) -> Result<String, RequestError> {
        Ok(request.prompt().to_string())
    }
}

/// Always answers with the same text.
#[derive(Debug, Clone)]
pub struct FixedBackend(pub String);

#[async_trait]
impl ChatBackend for FixedBackend {
    async fn complete(&self, _request: &ChatRequest) -> Result<String, RequestError> {
        Ok(self.0.clone())
    }
}

/// Answers prompts from a fixed prompt → response table; unknown prompts
/// get an empty reply.
#[derive(Debug, Clone, Default)]
pub struct LookupBackend(pub std::collections::HashMap<String, String>);

#[async_trait]
impl ChatBackend for LookupBackend {
    async fn complete(&self, request: &ChatRequest) -> Result<String, RequestError> {
        Ok(self.0.get(request.prompt()).cloned().unwrap_or_default())
    }
}

/// Plays back queued results in order, then delegates to `fallback`.
pub struct ScriptedBackend {
    script: Mutex<VecDeque<Result<String, RequestError>>>,
    fallback: Arc<dyn ChatBackend>,
    calls: AtomicU32,
}

impl ScriptedBackend {
    pub fn new(
        script: impl IntoIterator<Item = Result<String, RequestError>>,
        fallback: Arc<dyn ChatBackend>,
    ) -> Self {
        ScriptedBackend {
            script: Mutex::new(script.into_iter().collect()),
            fallback,
            calls: AtomicU32::new(0),
        }
    }

    /// Fails the first `n` calls with `error`.
    pub fn failing_first(n: usize, error: RequestError, fallback: Arc<dyn ChatBackend>) -> Self {
        Self::new(std::iter::repeat_n(Err(error), n), fallback)
    }

    pub fn calls(&self) -> u32 {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl ChatBackend for ScriptedBackend {
    async fn complete(&self, request: &ChatRequest) -> Result<String, RequestError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let next = self.script.lock().expect("script lock").pop_front();
        match next {
            Some(result) => result,
            None => self.fallback.complete(request).await,
        }
    }
}

/// Resolves an endpoint URL to a backend. `mock://quiz`, `mock://echo` and
/// `mock://garbage` stay in-process; anything else goes over HTTP.
pub fn backend_for(
    cfg: &ModelConfig,
    params: &RenderParams,
) -> Result<Arc<dyn ChatBackend>, RequestError> {
    match cfg.endpoint_url.strip_prefix(MOCK_SCHEME) {
        Some("quiz") => Ok(Arc::new(MockQuizBackend::new(*params))),
        Some("echo") => Ok(Arc::new(EchoBackend)),
        Some("garbage") => Ok(Arc::new(FixedBackend(
            "Bu metinden soru üretemiyorum.".into(),
        ))),
        Some(other) => Err(RequestError::Transport {
            message: format!(
                "unknown mock endpoint mock://{other} (expected quiz, echo or garbage)"
            ),
        }),
        None => Ok(Arc::new(HttpChatClient::new(cfg)?)),
    }
}

fn passage_of(prompt: &str) -> &str {
    prompt
        .split("\n\n")
        .map(str::trim)
        .max_by_key(|block| block.chars().count())
        .unwrap_or("")
}

fn words(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .collect()
}

fn sentences(passage: &str) -> Vec<&str> {
    passage
        .split_inclusive(['.', '!', '?', '\n'])
        .map(str::trim)
        .filter(|s| words(s).len() >= 3)
        .collect()
}

const FILLER_OPTIONS: [&str; 5] = ["hiçbiri", "bilinmiyor", "tümü", "yalnızca biri", "belirsiz"];

fn mock_items(passage: &str, params: &RenderParams) -> Vec<QuizItem> {
    let mut pool = sentences(passage);
    if pool.is_empty() {
        pool.push("Metin bu soruyu yanıtlamak için yeterli bilgi içermiyor.");
    }
    let vocabulary: Vec<&str> = {
        let mut seen = std::collections::BTreeSet::new();
        let mut v: Vec<&str> = words(passage)
            .into_iter()
            .filter(|w| w.chars().count() >= 4 && seen.insert(w.to_lowercase()))
            .collect();
        v.sort_by_key(|w| std::cmp::Reverse(w.chars().count()));
        v
    };
    (0..params.num_questions as usize)
        .map(|i| {
            let sentence = pool[i % pool.len()];
            let sentence_words = words(sentence);
            let answer = sentence_words
                .iter()
                .copied()
                .max_by_key(|w| w.chars().count())
                .unwrap_or("metin");
            let blanked = sentence.replacen(answer, "_____", 1);
            let id = item_id("mock", i);
            match params.format {
                QuizKind::Saq => QuizItem::saq(
                    id,
                    format!("{blanked} Boşluğa gelmesi gereken kelime nedir?"),
                    answer,
                ),
                QuizKind::Mcq => {
                    let k = params.options_per_question as usize;
                    let mut distractors: Vec<String> = vocabulary
                        .iter()
                        .filter(|w| {
                            !sentence_words
                                .iter()
                                .any(|s| s.to_lowercase() == w.to_lowercase())
                        })
                        .skip(i)
                        .take(k - 1)
                        .map(|w| w.to_string())
                        .collect();
                    for filler in FILLER_OPTIONS {
                        if distractors.len() == k - 1 {
                            break;
                        }
                        if filler != answer && !distractors.iter().any(|d| d == filler) {
                            distractors.push(filler.to_string());
                        }
                    }
                    let correct_index = i % k;
                    distractors.insert(correct_index, answer.to_string());
                    QuizItem::mcq(
                        id,
                        format!("{blanked} Boşluğa aşağıdakilerden hangisi gelmelidir?"),
                        distractors,
                        OptionLabel::from_index(correct_index).expect("k <= 5"),
                    )
                }
            }
        })
        .collect()
}

#[derive(Clone)]
struct ServerState {
    backend: Arc<dyn ChatBackend>,
}

fn error_response(error: RequestError) -> Response {
    let status = match &error {
        RequestError::Timeout => StatusCode::GATEWAY_TIMEOUT,
        RequestError::HttpStatus { status, .. } => {
            StatusCode::from_u16(*status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
        }
        RequestError::Auth { .. } => StatusCode::UNAUTHORIZED,
        RequestError::RateLimited { .. } => StatusCode::TOO_MANY_REQUESTS,
        RequestError::Transport { .. } | RequestError::InvalidResponse { .. } => {
            StatusCode::BAD_GATEWAY
        }
    };
    let body = serde_json::json!({"error": {"message": error.to_string()}});
    let mut response = (status, Json(body)).into_response();
    if let RequestError::RateLimited {
        retry_after_secs: Some(secs),
    } = error
    {
        response
            .headers_mut()
            .insert(axum::http::header::RETRY_AFTER, secs.into());
    }
    response
}

async fn chat_completions(
    State(state): State<ServerState>,
    Json(request): Json<ChatRequest>,
) -> Response {
    match state.backend.complete(&request).await {
        Ok(content) => Json(ChatResponse::from_content(&request.model, content)).into_response(),
        Err(error) => error_response(error),
    }
}

/// Router serving `POST /chat/completions` and `POST /v1/chat/completions`.
pub fn router(backend: Arc<dyn ChatBackend>) -> Router {
    Router::new()
        .route("/chat/completions", post(chat_completions))
        .route("/v1/chat/completions", post(chat_completions))
        .with_state(ServerState { backend })
}

/// Binds `addr` and serves `backend` in a background task. Returns the
/// bound address (useful with port 0).
pub async fn spawn_server(
    addr: SocketAddr,
    backend: Arc<dyn ChatBackend>,
) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    tokio::spawn(async move {
        let _ = axum::serve(listener, router(backend)).await;
    });
    Ok(local)
}
