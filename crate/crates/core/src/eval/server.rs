//! JSON API and static files for human review.
//!
//! | Route | |
//! |---|---|
//! | `GET /api/items/next?annotator=ID` | first item (by index) the annotator has not rated |
//! | `GET /api/items/{item_id}` | one item with its source context |
//! | `POST /api/ratings` | `{"item_id", "annotator_id", "rating": "A".."E", "comment"?}` → 201 |
//! | `GET /api/progress[?annotator=ID]` | rating counts |
//! | `GET /api/rubric` | rating rubric (English and Turkish) |

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use super::review::{aggregate_ratings, AnnotationStore, RatingDistribution, StoreError};
use crate::model::{QuizKind, QuizOption, QuizSet, Rating, SourceDocument, Subject};

pub const RUBRIC_JSON: &str = include_str!("../../assets/rubric.json");

const PLACEHOLDER_INDEX: &str = "<!DOCTYPE html>\n<html lang=\"tr\">\n<head><meta charset=\"utf-8\"><title>Review</title></head>\n\
<body>\n<p>The review UI is not installed. Start the server with <code>--static-dir</code> pointing at a built UI, \
or use the JSON API under <code>/api</code>.</p>\n</body>\n</html>\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceContext {
    pub title: String,
    pub subject: Subject,
    pub body: String,
}

/// An item as the review UI shows it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItemView {
    pub index: usize,
    pub item_id: String,
    pub doc_id: String,
    pub kind: QuizKind,
    pub stem: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<QuizOption>,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<SourceContext>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub items: usize,
    /// Effective ratings across all annotators.
    pub ratings: usize,
    pub by_annotator: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<AnnotatorProgress>,
    pub distribution: RatingDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorProgress {
    pub id: String,
    pub rated: usize,
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextItem {
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<ReviewItemView>,
    pub progress: AnnotatorProgress,
}

pub struct ReviewState {
    items: Vec<ReviewItemView>,
    by_id: HashMap<String, usize>,
    store: Mutex<AnnotationStore>,
}

impl ReviewState {
    /// Items are indexed in set order, then item order.
    pub fn new(sets: &[QuizSet], corpus: &[SourceDocument], store: AnnotationStore) -> ReviewState {
        let docs: HashMap<&str, &SourceDocument> =
            corpus.iter().map(|d| (d.id.as_str(), d)).collect();
        let mut items = Vec::new();
        let mut by_id = HashMap::new();
        for qs in sets {
            let context = docs.get(qs.doc_id.as_str()).map(|d| SourceContext {
                title: d.title.clone(),
                subject: d.subject.clone(),
                body: d.body.clone(),
            });
            for item in &qs.items {
                if by_id.contains_key(&item.item_id) {
                    continue;
                }
                by_id.insert(item.item_id.clone(), items.len());
                items.push(ReviewItemView {
                    index: items.len(),
                    item_id: item.item_id.clone(),
                    doc_id: qs.doc_id.clone(),
                    kind: item.kind,
                    stem: item.stem.clone(),
                    options: item.options().to_vec(),
                    answer: item.answer().unwrap_or_default().to_string(),
                    correct_label: item.correct_label.map(|l| l.to_string()),
                    context: context.clone(),
                });
            }
        }
        ReviewState {
            items,
            by_id,
            store: Mutex::new(store),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn annotator_progress(&self, store: &AnnotationStore, annotator: &str) -> AnnotatorProgress {
        let rated = self
            .items
            .iter()
            .filter(|i| store.has_rated(&i.item_id, annotator))
            .count();
        AnnotatorProgress {
            id: annotator.to_string(),
            rated,
            remaining: self.items.len() - rated,
        }
    }
}

fn api_error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({"error": message.into()}))).into_response()
}

#[derive(Deserialize)]
struct AnnotatorQuery {
    annotator: Option<String>,
}

async fn next_item(
    State(state): State<Arc<ReviewState>>,
    Query(q): Query<AnnotatorQuery>,
) -> Response {
    let Some(annotator) = q.annotator.filter(|a| !a.trim().is_empty()) else {
        return api_error(
            StatusCode::BAD_REQUEST,
            "query parameter 'annotator' is required",
        );
    };
    let store = state.store.lock().expect("store lock");
    let item = state
        .items
        .iter()
        .find(|i| !store.has_rated(&i.item_id, &annotator))
        .cloned();
    let progress = state.annotator_progress(&store, &annotator);
    Json(NextItem {
        done: item.is_none(),
        item,
        progress,
    })
    .into_response()
}

async fn get_item(State(state): State<Arc<ReviewState>>, Path(id): Path<String>) -> Response {
    match state.by_id.get(&id) {
        Some(&i) => Json(state.items[i].clone()).into_response(),
        None => api_error(StatusCode::NOT_FOUND, format!("unknown item {id}")),
    }
}

#[derive(Deserialize)]
struct RatingBody {
    #[serde(alias = "item")]
    item_id: String,
    #[serde(alias = "annotator")]
    annotator_id: String,
    rating: serde_json::Value,
    #[serde(default)]
    comment: Option<String>,
}

async fn post_rating(State(state): State<Arc<ReviewState>>, body: Bytes) -> Response {
    let body: RatingBody = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => return api_error(StatusCode::BAD_REQUEST, format!("invalid body: {e}")),
    };
    let rating: Rating = match &body.rating {
        serde_json::Value::String(s) => match s.parse() {
            Ok(r) => r,
            Err(e) => return api_error(StatusCode::BAD_REQUEST, e),
        },
        serde_json::Value::Number(n) => match n.to_string().parse() {
            Ok(r) => r,
            Err(e) => return api_error(StatusCode::BAD_REQUEST, e),
        },
        other => return api_error(StatusCode::BAD_REQUEST, format!("invalid rating {other}")),
    };
    if !state.by_id.contains_key(&body.item_id) {
        return api_error(
            StatusCode::BAD_REQUEST,
            format!("unknown item {}", body.item_id),
        );
    }
    let comment = body.comment.filter(|c| !c.trim().is_empty());
    let mut store = state.store.lock().expect("store lock");
    match store.rate(
        &body.item_id,
        &body.annotator_id,
        rating,
        comment,
        chrono::Utc::now(),
    ) {
        Ok(saved) => (StatusCode::CREATED, Json(saved)).into_response(),
        Err(StoreError::Invalid(e)) => api_error(StatusCode::BAD_REQUEST, e.to_string()),
        Err(e) => {
            tracing::error!(%e, "failed to persist rating");
            api_error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
        }
    }
}

async fn progress(
    State(state): State<Arc<ReviewState>>,
    Query(q): Query<AnnotatorQuery>,
) -> Response {
    let store = state.store.lock().expect("store lock");
    let by_annotator = store.annotators().into_iter().map(|a| {
        let n = store.rated_by(&a);
        (a, n)
    });
    Json(Progress {
        items: state.items.len(),
        ratings: store.effective_count(),
        by_annotator: by_annotator.collect(),
        annotator: q
            .annotator
            .filter(|a| !a.trim().is_empty())
            .map(|a| state.annotator_progress(&store, &a)),
        distribution: aggregate_ratings(&store),
    })
    .into_response()
}

async fn rubric() -> Response {
    (
        [(axum::http::header::CONTENT_TYPE, "application/json")],
        RUBRIC_JSON,
    )
        .into_response()
}

/// API routes plus static files from `static_dir`, or a placeholder page.
pub fn router(state: Arc<ReviewState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/items/next", get(next_item))
        .route("/api/items/{id}", get(get_item))
        .route("/api/ratings", axum::routing::post(post_rating))
        .route("/api/progress", get(progress))
        .route("/api/rubric", get(rubric))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER_INDEX) })),
    }
}

/// Binds `addr` and serves in a background task; returns the bound
/// address.
pub async fn spawn(
    addr: SocketAddr,
    state: Arc<ReviewState>,
    static_dir: Option<PathBuf>,
) -> std::io::Result<(SocketAddr, tokio::task::JoinHandle<()>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let handle = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, router(state, static_dir)).await {
            tracing::error!(%e, "review server stopped");
        }
    });
    Ok((local, handle))
}
