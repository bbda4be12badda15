//! Model evaluation on the eval split, result tables, and human review
//! tooling.

mod report;
mod review;
pub mod server;

use std::path::PathBuf;
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::dataset::{self, InstructRecord};
use crate::generation::{
    parse_quiz, request_with_retries, BatchPolicy, ChatBackend, ChatRequest, Expected, ModelConfig,
    RateLimiter,
};
use crate::jsonl::ReadError;
use crate::model::{Provenance, QuizKind};
use crate::rouge::{normalize_tr, rouge_report, MeanF1, RougeReport};

pub use report::{compare_runs, ComparisonRow, ComparisonTable, ReportFormat};
pub use review::{
    aggregate_by_annotator, aggregate_ratings, sample_for_review, sample_to_sets, AnnotationStore,
    RatingDistribution, RatingShare, ReviewItem, SampleError, StoreError,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRunConfig {
    pub model: ModelConfig,
    pub eval_set: PathBuf,
    pub format: QuizKind,
    pub label: String,
}

impl EvalRunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.label.trim().is_empty() {
            return Err("label must not be empty".into());
        }
        self.model.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalItem {
    /// Position of the record in the eval set.
    pub index: usize,
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated: Option<String>,
    pub parsed_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<RougeReport>,
}

/// Headline numbers of one evaluation run; also the unit of comparison
/// tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub model: String,
    pub label: String,
    pub format: QuizKind,
    #[serde(default)]
    pub records: usize,
    #[serde(default)]
    pub scored: usize,
    #[serde(default)]
    pub parse_failed: usize,
    #[serde(default)]
    pub request_failed: usize,
    pub mean_f1: MeanF1,
}

impl RunSummary {
    pub fn row_label(&self) -> String {
        format!("{} {}", self.model, self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub summary: RunSummary,
    pub items: Vec<EvalItem>,
}

impl EvalResult {
    /// Means over items that parsed and were scored.
    pub fn recompute_means(items: &[EvalItem]) -> MeanF1 {
        MeanF1::of(
            items
                .iter()
                .filter(|i| i.parsed_ok)
                .filter_map(|i| i.scores.as_ref()),
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read eval set: {0}")]
    EvalSet(#[from] ReadError),
}

/// The prompt sent for an eval record: instruction, blank line, input.
pub fn eval_prompt(record: &InstructRecord) -> String {
    format!("{}\n\n{}", record.instruction, record.input)
}

/// Runs every eval record of the configured format through `backend` and
/// scores the generated text against the record's reference output.
/// Responses that do not parse as a quiz of that format are counted but
/// left out of the means.
pub async fn evaluate_model(
    cfg: &EvalRunConfig,
    backend: Arc<dyn ChatBackend>,
    policy: &BatchPolicy,
) -> Result<EvalResult, EvalError> {
    cfg.validate().map_err(EvalError::Config)?;
    policy.validate().map_err(EvalError::Config)?;
    let records: Vec<InstructRecord> = dataset::read_records(&cfg.eval_set)?
        .into_iter()
        .filter(|r| r.meta.format == cfg.format)
        .collect();
    Ok(evaluate_records(cfg, &records, backend, policy).await)
}

/// [`evaluate_model`] over records already in memory.
pub async fn evaluate_records(
    cfg: &EvalRunConfig,
    records: &[InstructRecord],
    backend: Arc<dyn ChatBackend>,
    policy: &BatchPolicy,
) -> EvalResult {
    let limiter = RateLimiter::per_minute(policy.requests_per_minute);
    let expected = Expected::format_only(cfg.format);
    let provenance = Provenance {
        model: cfg.model.model_name.clone(),
        endpoint: cfg.model.endpoint_url.clone(),
        temperature: cfg.model.temperature,
        generated_at: chrono::DateTime::UNIX_EPOCH,
        notes: Vec::new(),
    };
    let items: Vec<EvalItem> = stream::iter(records.iter().enumerate())
        .map(|(index, record)| {
            let request = ChatRequest::from_prompt(&eval_prompt(record), &cfg.model);
            let (backend, limiter, provenance) = (backend.as_ref(), &limiter, &provenance);
            async move {
                let (result, _) = request_with_retries(
                    backend,
                    limiter,
                    policy,
                    &request,
                    policy.max_retries + 1,
                )
                .await;
                let mut item = EvalItem {
                    index,
                    doc_id: record.meta.doc_id.clone(),
                    generated: None,
                    parsed_ok: false,
                    error: None,
                    scores: None,
                };
                match result {
                    Err(e) => item.error = Some(e.to_string()),
                    Ok(text) => {
                        match parse_quiz(&text, &expected, &record.meta.doc_id, provenance.clone())
                        {
                            Ok(_) => {
                                item.parsed_ok = true;
                                item.scores = Some(rouge_report(
                                    &normalize_tr(&text),
                                    &normalize_tr(&record.output),
                                ));
                            }
                            Err(e) => item.error = Some(e.to_string()),
                        }
                        item.generated = Some(text);
                    }
                }
                item
            }
        })
        .buffered(policy.max_concurrency)
        .collect()
        .await;
    let scored = items.iter().filter(|i| i.parsed_ok).count();
    let request_failed = items.iter().filter(|i| i.generated.is_none()).count();
    let summary = RunSummary {
        model: cfg.model.model_name.clone(),
        label: cfg.label.clone(),
        format: cfg.format,
        records: items.len(),
        scored,
        parse_failed: items.len() - scored - request_failed,
        request_failed,
        mean_f1: EvalResult::recompute_means(&items),
    };
    EvalResult { summary, items }
}
