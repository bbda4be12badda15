//! Concurrent, rate-limited, resumable generation over many documents.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::time::Instant;

use super::client::{ChatBackend, ChatRequest, RequestError};
use super::layout::{parse_quiz, Expected};
use super::{BatchPolicy, GenerationOutcome, ModelConfig, OutcomeStatus};
use crate::jsonl::{self, IoError};
use crate::model::{Provenance, QuizKind, SourceDocument};
use crate::prompting::{RenderParams, TemplateSet};

/// Checkpoint file name inside a run's output directory.
pub const CHECKPOINT_FILE: &str = "outcomes.jsonl";

/// Spaces request starts at least `60 / rpm` seconds apart.
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_minute(rpm: u32) -> RateLimiter {
        RateLimiter {
            interval: Duration::from_secs_f64(60.0 / f64::from(rpm.max(1))),
            next: Mutex::new(None),
        }
    }

    pub async fn acquire(&self) {
        let slot = {
            let mut next = self.next.lock().expect("limiter lock");
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot
        };
        tokio::time::sleep_until(slot).await;
    }
}

#[derive(Debug, Clone)]
pub struct RunContext {
    /// Directory receiving the outcomes checkpoint; `None` disables it.
    pub output_dir: Option<PathBuf>,
    /// Timestamp stamped into every provenance record of this run.
    pub started_at: DateTime<Utc>,
}

impl RunContext {
    pub fn new(output_dir: Option<PathBuf>, started_at: DateTime<Utc>) -> Self {
        RunContext {
            output_dir,
            started_at,
        }
    }

    pub fn checkpoint_path(&self) -> Option<PathBuf> {
        self.output_dir.as_ref().map(|d| d.join(CHECKPOINT_FILE))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub ok: usize,
    pub parse_failed: usize,
    pub request_failed: usize,
    /// Documents whose Ok outcome was taken from the checkpoint.
    pub resumed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub outcomes: Vec<GenerationOutcome>,
    pub summary: BatchSummary,
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("corrupt checkpoint {path} line {line}: {message}")]
    Checkpoint {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn load_checkpoint(path: &Path) -> Result<HashMap<String, GenerationOutcome>, BatchError> {
    let mut done = HashMap::new();
    jsonl::repair_tail(path, |l| {
        serde_json::from_str::<GenerationOutcome>(l).is_ok()
    })?;
    if !path.exists() {
        return Ok(done);
    }
    for (line, text) in jsonl::read_lines(path)? {
        let outcome: GenerationOutcome =
            serde_json::from_str(&text).map_err(|e| BatchError::Checkpoint {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
        if outcome.is_ok() {
            done.insert(outcome.doc_id.clone(), outcome);
        } else {
            done.remove(&outcome.doc_id);
        }
    }
    Ok(done)
}

struct Job<'a> {
    backend: &'a dyn ChatBackend,
    limiter: &'a RateLimiter,
    policy: &'a BatchPolicy,
    model: &'a ModelConfig,
    expected: Expected,
    started_at: DateTime<Utc>,
}

/// Sends `request` up to `max_attempts` times, backing off exponentially
/// after retryable errors. Returns the last result and the number of
/// requests made.
pub async fn request_with_retries(
    backend: &dyn ChatBackend,
    limiter: &RateLimiter,
    policy: &BatchPolicy,
    request: &ChatRequest,
    max_attempts: u32,
) -> (Result<String, RequestError>, u32) {
    let mut attempts = 0;
    loop {
        attempts += 1;
        limiter.acquire().await;
        match backend.complete(request).await {
            Err(error) if error.is_retryable() && attempts < max_attempts => {
                let mut delay = policy.backoff(attempts);
                if let RequestError::RateLimited {
                    retry_after_secs: Some(secs),
                } = error
                {
                    delay = delay.max(Duration::from_secs(secs));
                }
                tracing::warn!(attempt = attempts, %error, "retrying in {delay:?}");
                tokio::time::sleep(delay).await;
            }
            result => return (result, attempts),
        }
    }
}

impl Job<'_> {
    async fn run(&self, doc: &SourceDocument, prompt: String) -> GenerationOutcome {
        let request = ChatRequest::from_prompt(&prompt, self.model);
        let budget = self.policy.max_retries + 1;
        let mut attempts = 0;
        let mut regenerated = false;
        let status = loop {
            let (result, used) = request_with_retries(
                self.backend,
                self.limiter,
                self.policy,
                &request,
                budget - attempts,
            )
            .await;
            attempts += used;
            match result {
                Err(error) => break OutcomeStatus::RequestFailed { error },
                Ok(raw_text) => {
                    match parse_quiz(&raw_text, &self.expected, &doc.id, self.provenance()) {
                        Ok(quiz) => break OutcomeStatus::Ok { quiz },
                        Err(error) if !regenerated && attempts < budget => {
                            regenerated = true;
                            tracing::warn!(doc = %doc.id, %error, "unparseable response, regenerating");
                        }
                        Err(error) => break OutcomeStatus::ParseFailed { raw_text, error },
                    }
                }
            }
        };
        GenerationOutcome {
            doc_id: doc.id.clone(),
            status,
            attempts,
        }
    }

    fn provenance(&self) -> Provenance {
        Provenance {
            model: self.model.model_name.clone(),
            endpoint: self.model.endpoint_url.clone(),
            temperature: self.model.temperature,
            generated_at: self.started_at,
            notes: Vec::new(),
        }
    }
}

/// Generates one quiz set per document. Outcomes come back in input
/// order. With a checkpoint directory, every finished outcome is appended
/// to `outcomes.jsonl` as it completes, and documents already recorded Ok
/// there are not requested again.
///
/// Each document gets at most `max_retries + 1` requests. Retryable
/// request errors are retried after exponential backoff; an unparseable
/// response is regenerated once, and that request counts against the same
/// budget.
pub async fn run_batch(
    backend: Arc<dyn ChatBackend>,
    docs: &[SourceDocument],
    templates: &TemplateSet,
    params: &RenderParams,
    model: &ModelConfig,
    policy: &BatchPolicy,
    ctx: &RunContext,
) -> Result<BatchReport, BatchError> {
    model.validate().map_err(BatchError::Config)?;
    policy.validate().map_err(BatchError::Config)?;
    params.validate().map_err(BatchError::Config)?;

    let checkpoint = ctx.checkpoint_path();
    let mut done = match &checkpoint {
        Some(path) => load_checkpoint(path)?,
        None => HashMap::new(),
    };
    let limiter = RateLimiter::per_minute(policy.requests_per_minute);
    let job = Job {
        backend: backend.as_ref(),
        limiter: &limiter,
        policy,
        model,
        expected: Expected {
            format: params.format,
            options_per_question: (params.format == QuizKind::Mcq)
                .then_some(params.options_per_question),
            num_questions: Some(params.num_questions),
        },
        started_at: ctx.started_at,
    };
    let writer = Mutex::new(());
    let write_error: Mutex<Option<IoError>> = Mutex::new(None);

    let mut summary = BatchSummary::default();
    let mut slots: Vec<Option<GenerationOutcome>> = Vec::with_capacity(docs.len());
    let mut pending = Vec::new();
    for (i, doc) in docs.iter().enumerate() {
        match done.remove(&doc.id) {
            Some(outcome) => {
                summary.resumed += 1;
                slots.push(Some(outcome));
            }
            None => {
                slots.push(None);
                pending.push(i);
            }
        }
    }

    let fresh: Vec<(usize, GenerationOutcome)> = stream::iter(pending)
        .map(|i| {
            let doc = &docs[i];
            let prompt = templates.render(doc, params);
            let job = &job;
            let writer = &writer;
            let write_error = &write_error;
            let checkpoint = checkpoint.as_deref();
            async move {
                let outcome = job.run(doc, prompt).await;
                if let Some(path) = checkpoint {
                    let line = serde_json::to_string(&outcome).expect("outcomes serialize");
                    let _guard = writer.lock().expect("writer lock");
                    if let Err(e) = jsonl::append_line_durable(path, &line) {
                        write_error.lock().expect("error lock").get_or_insert(e);
                    }
                }
                (i, outcome)
            }
        })
        .buffered(policy.max_concurrency)
        .collect()
        .await;

    if let Some(e) = write_error.into_inner().expect("error lock") {
        return Err(e.into());
    }
    for (i, outcome) in fresh {
        slots[i] = Some(outcome);
    }
    let outcomes: Vec<GenerationOutcome> = slots
        .into_iter()
        .map(|o| o.expect("every slot filled"))
        .collect();
    for outcome in &outcomes {
        match outcome.status {
            OutcomeStatus::Ok { .. } => summary.ok += 1,
            OutcomeStatus::ParseFailed { .. } => summary.parse_failed += 1,
            OutcomeStatus::RequestFailed { .. } => summary.request_failed += 1,
        }
    }
    Ok(BatchReport { outcomes, summary })
}
