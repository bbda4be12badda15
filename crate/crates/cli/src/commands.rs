use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use quizforge_core::corpus::{
    self, CleanConfig, FilterConfig, RawRecord, Rejection, TokenizerKind,
};
use quizforge_core::dataset::{self, FinetuneConfig, ModelKind};
use quizforge_core::eval::{
    self, server, AnnotationStore, EvalResult, EvalRunConfig, ReportFormat, RunSummary,
};
use quizforge_core::generation::{self, mock, BatchError, BatchPolicy, ModelConfig, OutcomeStatus};
use quizforge_core::jsonl;
use quizforge_core::model::{QuizKind, QuizSet, SourceDocument};
use quizforge_core::prompting::{self, RenderParams, DEFAULT_INSTRUCTION};
use quizforge_core::rouge::{self, CandidateMode, GateAggregate, GateConfig, MeanF1};
use quizforge_core::transform;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult, EXIT_INVALID, EXIT_IO};

pub const QUIZZES_FILE: &str = "quizzes.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const RECORDS_FILE: &str = "records.jsonl";

/// What a command reports: text for people, JSON for scripts, and the exit
/// code when the command finished but found problems in its input.
pub struct Report {
    pub text: String,
    pub json: Value,
    pub code: i32,
}

impl Report {
    fn ok(text: String, json: Value) -> Report {
        Report {
            text,
            json,
            code: 0,
        }
    }
}

fn parse_flag<T: std::str::FromStr<Err = String>>(flag: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|e| CliError::invalid(format!("--{flag}: {e}")))
}

fn require_path(
    flag: Option<&PathBuf>,
    fallback: Option<PathBuf>,
    what: &str,
) -> CliResult<PathBuf> {
    flag.cloned()
        .or(fallback)
        .ok_or_else(|| CliError::invalid(format!("{what} is required (flag or config file)")))
}

fn must_exist(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::invalid(format!(
            "{} does not exist",
            path.display()
        )))
    }
}

fn load_corpus(path: &Path) -> CliResult<Vec<SourceDocument>> {
    must_exist(path)?;
    Ok(jsonl::read_entities_strict(path)?)
}

fn load_sets(path: &Path) -> CliResult<Vec<QuizSet>> {
    must_exist(path)?;
    Ok(jsonl::read_entities_strict(path)?)
}

fn to_json<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("report values serialize")
}

fn apply_model(cfg: &mut ModelConfig, a: &ModelArgs) {
    if let Some(v) = &a.model {
        cfg.model_name = v.clone();
    }
    if let Some(v) = &a.endpoint {
        cfg.endpoint_url = v.clone();
    }
    if let Some(v) = &a.api_key_env {
        cfg.api_key_env = v.clone();
    }
    if let Some(v) = a.temperature {
        cfg.temperature = v;
    }
    if let Some(v) = a.max_output_tokens {
        cfg.max_output_tokens = v;
    }
    if let Some(v) = a.timeout {
        cfg.timeout_secs = v;
    }
}

fn apply_batch(cfg: &mut BatchPolicy, a: &BatchArgs) {
    if let Some(v) = a.concurrency {
        cfg.max_concurrency = v;
    }
    if let Some(v) = a.rpm {
        cfg.requests_per_minute = v;
    }
    if let Some(v) = a.max_retries {
        cfg.max_retries = v;
    }
    if let Some(v) = a.backoff_base {
        cfg.backoff_base_secs = v;
    }
}

fn apply_render(
    cfg: &mut RenderParams,
    format: Option<&str>,
    num_questions: Option<u32>,
    options: Option<u8>,
) -> CliResult<()> {
    if let Some(f) = format {
        cfg.format = parse_flag("format", f)?;
    }
    if let Some(n) = num_questions {
        cfg.num_questions = n;
    }
    if let Some(k) = options {
        cfg.options_per_question = k;
    }
    cfg.validate().map_err(CliError::invalid)
}

pub fn corpus_clean(cfg: &PipelineConfig, a: &CleanArgs) -> CliResult<Report> {
    let mut filter: FilterConfig = cfg.filter;
    let mut clean: CleanConfig = cfg.clean;
    if let Some(v) = a.min_tokens {
        filter.min_tokens = v;
    }
    if let Some(v) = a.max_tokens {
        filter.max_tokens = v;
    }
    if let Some(t) = &a.tokenizer {
        let t: TokenizerKind = parse_flag("tokenizer", t)?;
        filter.tokenizer = t;
        clean.tokenizer = t;
    }
    if let Some(v) = a.fragment_min_tokens {
        clean.fragment_min_tokens = v;
    }
    filter.validate().map_err(CliError::invalid)?;
    let out = require_path(a.out.as_ref(), cfg.paths.corpus.clone(), "--out")?;
    must_exist(&a.input)?;

    let raw: Vec<RawRecord> = corpus::load_raw(&a.input)?;
    let (docs, mut rejected) = corpus::ingest(&raw, &clean, filter.tokenizer);
    let outcome = corpus::filter_docs(docs, &filter);
    rejected.extend(outcome.rejected.into_iter().map(|(doc, reason)| Rejection {
        doc_id: Some(doc.id),
        source_url: doc.source_url.unwrap_or_default(),
        reason,
    }));
    jsonl::write_entities(&out, &outcome.kept)?;
    if let Some(path) = &a.rejects {
        jsonl::write_records(path, &rejected)?;
    }
    let text = format!(
        "{} raw records: {} kept, {} rejected -> {}\n",
        raw.len(),
        outcome.kept.len(),
        rejected.len(),
        out.display()
    );
    Ok(Report::ok(
        text,
        json!({"raw": raw.len(), "kept": outcome.kept.len(), "rejected": rejected.len(), "out": out}),
    ))
}

pub fn stats(cfg: &PipelineConfig, a: &StatsArgs) -> CliResult<Report> {
    if a.bucket_width == 0 {
        return Err(CliError::invalid("--bucket-width must be positive"));
    }
    let path = require_path(a.corpus.as_ref(), cfg.paths.corpus.clone(), "--corpus")?;
    let docs = load_corpus(&path)?;
    let stats = corpus::corpus_stats(&docs, a.bucket_width);
    if let Some(out) = &a.out {
        jsonl::write_json(out, &stats)?;
    }
    let mut text = format!(
        "{} documents, {} tokens (mean {:.1}, min {}, max {})\n",
        stats.documents, stats.total_tokens, stats.mean_tokens, stats.min_tokens, stats.max_tokens
    );
    for s in &stats.subjects.subjects {
        let _ = writeln!(text, "  {}: {} ({:.1}%)", s.subject, s.count, s.percentage);
    }
    for b in &stats.tokens.buckets {
        let _ = writeln!(text, "  [{}, {}): {}", b.start, b.end, b.count);
    }
    Ok(Report::ok(text, to_json(&stats)))
}

/// Explicit flag, else `SOURCE_DATE_EPOCH`, else now.
fn run_timestamp(flag: Option<&str>) -> CliResult<DateTime<Utc>> {
    if let Some(t) = flag {
        return DateTime::parse_from_rfc3339(t)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| CliError::invalid(format!("--timestamp: {e}")));
    }
    if let Ok(epoch) = std::env::var("SOURCE_DATE_EPOCH") {
        let secs: i64 = epoch.trim().parse().map_err(|_| {
            CliError::invalid(format!("SOURCE_DATE_EPOCH is not an integer: {epoch:?}"))
        })?;
        return DateTime::from_timestamp(secs, 0)
            .ok_or_else(|| CliError::invalid(format!("SOURCE_DATE_EPOCH out of range: {secs}")));
    }
    Ok(Utc::now())
}

pub async fn generate(cfg: &PipelineConfig, a: &GenerateArgs) -> CliResult<Report> {
    let mut model = cfg.model.clone();
    apply_model(&mut model, &a.model);
    model.validate().map_err(CliError::invalid)?;
    let mut policy = cfg.batch.clone();
    apply_batch(&mut policy, &a.batch);
    policy.validate().map_err(CliError::invalid)?;
    let mut params = cfg.render;
    apply_render(&mut params, a.format.as_deref(), a.num_questions, a.options)?;
    let started_at = run_timestamp(a.timestamp.as_deref())?;

    let corpus_path = require_path(a.corpus.as_ref(), cfg.paths.corpus.clone(), "--corpus")?;
    let out = require_path(a.out.as_ref(), cfg.output("generate"), "--out")?;
    let template_dir = a
        .template_dir
        .clone()
        .or_else(|| cfg.paths.templates.clone());
    let templates = match &template_dir {
        Some(dir) => {
            must_exist(dir)?;
            prompting::load_templates(dir).map_err(|e| match e {
                prompting::TemplateError::Io(e) => CliError::from(e),
                other => CliError::invalid(other.to_string()),
            })?
        }
        None => prompting::builtin_templates(),
    };
    let docs = load_corpus(&corpus_path)?;
    let backend =
        mock::backend_for(&model, &params).map_err(|e| CliError::invalid(e.to_string()))?;
    let ctx = generation::RunContext::new(Some(out.clone()), started_at);
    let report = generation::run_batch(backend, &docs, &templates, &params, &model, &policy, &ctx)
        .await
        .map_err(|e| match e {
            BatchError::Config(m) => CliError::invalid(m),
            BatchError::Io(e) => CliError::from(e),
            other => CliError::invalid(other.to_string()),
        })?;

    let sets: Vec<&QuizSet> = report.outcomes.iter().filter_map(|o| o.quiz()).collect();
    jsonl::write_entities(out.join(QUIZZES_FILE), sets.iter().copied())?;
    let failures: Vec<Value> = report
        .outcomes
        .iter()
        .filter_map(|o| match &o.status {
            OutcomeStatus::Ok { .. } => None,
            OutcomeStatus::ParseFailed { error, .. } => Some(
                json!({"doc_id": o.doc_id, "kind": "parse_failed", "error": error.to_string()}),
            ),
            OutcomeStatus::RequestFailed { error } => Some(
                json!({"doc_id": o.doc_id, "kind": "request_failed", "error": error.to_string()}),
            ),
        })
        .collect();
    let s = report.summary;
    let summary = json!({
        "documents": docs.len(),
        "ok": s.ok,
        "parse_failed": s.parse_failed,
        "request_failed": s.request_failed,
        "resumed": s.resumed,
        "items": sets.iter().map(|q| q.items.len()).sum::<usize>(),
        "model": model.model_name,
        "endpoint": model.endpoint_url,
        "generated_at": started_at,
        "failures": failures,
    });
    jsonl::write_json(out.join(SUMMARY_FILE), &summary)?;

    let mut text = format!(
        "{} documents: {} ok ({} resumed), {} parse failures, {} request failures -> {}\n",
        docs.len(),
        s.ok,
        s.resumed,
        s.parse_failed,
        s.request_failed,
        out.join(QUIZZES_FILE).display()
    );
    for f in &failures {
        let _ = writeln!(
            text,
            "  {} {}: {}",
            f["kind"].as_str().unwrap_or(""),
            f["doc_id"],
            f["error"]
        );
    }
    let code = if !docs.is_empty() && s.request_failed == docs.len() {
        EXIT_IO
    } else {
        0
    };
    Ok(Report {
        text,
        json: summary,
        code,
    })
}

pub fn mcq_to_saq(a: &McqToSaqArgs) -> CliResult<Report> {
    must_exist(&a.input)?;
    let summary = transform::transform_corpus(&a.input, &a.out)?;
    if let Some(path) = &a.report {
        jsonl::write_json(path, &summary)?;
    }
    let mut text = format!(
        "{} sets in, {} converted ({} items) -> {}\n",
        summary.sets_in,
        summary.sets_out,
        summary.items_transformed,
        a.out.display()
    );
    if !summary.option_dependent_items.is_empty() {
        let _ = writeln!(
            text,
            "  {} items refer to their options and may need rewording: {}",
            summary.option_dependent_items.len(),
            summary.option_dependent_items.join(", ")
        );
    }
    for e in &summary.errors {
        let _ = writeln!(text, "  line {}: {}", e.line, e.message);
    }
    let code = if summary.errors.is_empty() {
        0
    } else {
        EXIT_INVALID
    };
    Ok(Report {
        text,
        json: to_json(&summary),
        code,
    })
}

pub fn score(cfg: &PipelineConfig, a: &ScoreArgs) -> CliResult<Report> {
    let mut gate: GateConfig = cfg.gate;
    if let Some(v) = a.gate_min {
        gate.min_rouge_l = v;
    }
    if let Some(v) = a.gate_max {
        gate.max_rouge_l = Some(v);
    }
    if let Some(v) = a.aggregate {
        gate.aggregate = match v {
            AggregateArg::PerItem => GateAggregate::PerItem,
            AggregateArg::Mean => GateAggregate::MeanOverSet,
        };
    }
    if let Some(v) = a.candidate {
        gate.candidate = match v {
            CandidateArg::StemWithOptions => CandidateMode::StemWithOptions,
            CandidateArg::StemOnly => CandidateMode::StemOnly,
        };
    }
    gate.validate().map_err(CliError::invalid)?;
    let quiz = require_path(a.quiz.as_ref(), None, "--quiz")?;
    let corpus_path = require_path(a.corpus.as_ref(), cfg.paths.corpus.clone(), "--corpus")?;
    let sets = load_sets(&quiz)?;
    let docs = load_corpus(&corpus_path)?;
    let by_id: std::collections::HashMap<&str, &SourceDocument> =
        docs.iter().map(|d| (d.id.as_str(), d)).collect();

    let mut results = Vec::with_capacity(sets.len());
    let mut passed_sets = Vec::new();
    for qs in &sets {
        let doc = by_id.get(qs.doc_id.as_str()).ok_or_else(|| {
            CliError::invalid(format!(
                "quiz set references unknown document {}",
                qs.doc_id
            ))
        })?;
        let result =
            rouge::quality_gate(qs, doc, &gate).map_err(|e| CliError::invalid(e.to_string()))?;
        if result.passed {
            passed_sets.push(qs);
        }
        results.push(result);
    }
    if let Some(out) = &a.out {
        jsonl::write_records(out, &results)?;
    }
    if let Some(path) = &a.passed {
        jsonl::write_entities(path, passed_sets.iter().copied())?;
    }
    let mean = MeanF1::of(
        results
            .iter()
            .flat_map(|r| r.scores.items.iter().map(|i| &i.report)),
    );
    let items: usize = results.iter().map(|r| r.items.len()).sum();
    let items_passed: usize = results
        .iter()
        .map(|r| r.items.iter().filter(|i| i.passed).count())
        .sum();
    let text = format!(
        "{} sets: {} pass the gate; {items_passed}/{items} items within bounds\n\
         mean F1 x100 over items: ROUGE-1 {:.2} / ROUGE-2 {:.2} / ROUGE-L {:.2}\n",
        sets.len(),
        passed_sets.len(),
        mean.rouge1 * 100.0,
        mean.rouge2 * 100.0,
        mean.rouge_l * 100.0,
    );
    Ok(Report::ok(
        text,
        json!({
            "sets": sets.len(),
            "passed": passed_sets.len(),
            "items": items,
            "items_passed": items_passed,
            "mean_f1": mean,
            "gate": gate,
        }),
    ))
}

pub fn dataset_build(cfg: &PipelineConfig, a: &BuildArgs) -> CliResult<Report> {
    let corpus_path = require_path(a.corpus.as_ref(), cfg.paths.corpus.clone(), "--corpus")?;
    let out = require_path(a.out.as_ref(), cfg.output(RECORDS_FILE), "--out")?;
    let instruction = match &a.instruction {
        Some(path) => {
            must_exist(path)?;
            std::fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?
        }
        None => DEFAULT_INSTRUCTION.to_string(),
    };
    let mut sets = Vec::new();
    for path in &a.quiz {
        sets.extend(load_sets(path)?);
    }
    let docs = load_corpus(&corpus_path)?;
    let records = dataset::build_records(&sets, &docs, &instruction)
        .map_err(|e| CliError::invalid(e.to_string()))?;
    jsonl::write_entities(&out, &records)?;
    Ok(Report::ok(
        format!(
            "{} instruction records -> {}\n",
            records.len(),
            out.display()
        ),
        json!({"records": records.len(), "out": out}),
    ))
}

pub fn dataset_split(cfg: &PipelineConfig, a: &SplitArgs) -> CliResult<Report> {
    let train = a
        .train
        .or(cfg.split.train)
        .ok_or_else(|| CliError::invalid("--train is required (flag or [split] train)"))?;
    let eval_n = a
        .eval
        .or(cfg.split.eval)
        .ok_or_else(|| CliError::invalid("--eval is required (flag or [split] eval)"))?;
    let seed = a
        .seed
        .or(cfg.split.seed)
        .ok_or_else(|| CliError::invalid("--seed is required (flag or [split] seed)"))?;
    let records_path = require_path(a.records.as_ref(), cfg.output(RECORDS_FILE), "--records")?;
    let out = require_path(a.out.as_ref(), cfg.output("dataset"), "--out")?;
    must_exist(&records_path)?;
    let records = dataset::read_records(&records_path)?;
    let split = dataset::split(&records, train, eval_n, seed)
        .map_err(|e| CliError::invalid(e.to_string()))?;
    let emitted = dataset::emit_jsonl(&split, &out)?;
    let m = &emitted.manifest_data;
    let text = format!(
        "seed {seed}: train {} documents ({} records), eval {} documents ({} records), {} unused -> {}\n",
        m.train.documents,
        m.train.records,
        m.eval.documents,
        m.eval.records,
        m.unused_documents,
        out.display()
    );
    Ok(Report::ok(text, to_json(m)))
}

pub fn emit_config(a: &EmitConfigArgs) -> CliResult<Report> {
    let kind: ModelKind = parse_flag("model-kind", &a.model_kind)?;
    let cfg: FinetuneConfig = dataset::emit_finetune_config(kind, &a.out)?;
    Ok(Report::ok(
        format!(
            "{} -> {}\n{}",
            kind.display_name(),
            a.out.display(),
            cfg.to_toml()
        ),
        to_json(&cfg),
    ))
}

pub async fn eval_run(cfg: &PipelineConfig, a: &EvalRunArgs) -> CliResult<Report> {
    let mut model = cfg.model.clone();
    apply_model(&mut model, &a.model);
    let mut policy = cfg.batch.clone();
    apply_batch(&mut policy, &a.batch);
    policy.validate().map_err(CliError::invalid)?;
    let run = EvalRunConfig {
        model,
        eval_set: a.eval_set.clone(),
        format: parse_flag::<QuizKind>("format", &a.format)?,
        label: a.label.clone(),
    };
    run.validate().map_err(CliError::invalid)?;
    must_exist(&run.eval_set)?;
    let params = RenderParams {
        format: run.format,
        ..cfg.render
    };
    let backend =
        mock::backend_for(&run.model, &params).map_err(|e| CliError::invalid(e.to_string()))?;
    let result = eval::evaluate_model(&run, backend, &policy)
        .await
        .map_err(|e| match e {
            eval::EvalError::Config(m) => CliError::invalid(m),
            eval::EvalError::EvalSet(e) => CliError::from(e),
        })?;
    jsonl::write_json(&a.out, &result)?;
    let s = &result.summary;
    let text = format!(
        "{} ({}): {} records, {} scored, {} parse failures, {} request failures\n\
         mean F1 x100: {:.2} / {:.2} / {:.2} -> {}\n",
        s.row_label(),
        s.format,
        s.records,
        s.scored,
        s.parse_failed,
        s.request_failed,
        s.mean_f1.rouge1 * 100.0,
        s.mean_f1.rouge2 * 100.0,
        s.mean_f1.rouge_l * 100.0,
        a.out.display()
    );
    let code = if s.records > 0 && s.request_failed == s.records {
        EXIT_IO
    } else {
        0
    };
    Ok(Report {
        text,
        json: to_json(s),
        code,
    })
}

/// Accepts a full evaluation result or a bare run summary.
fn read_run(path: &Path) -> CliResult<RunSummary> {
    must_exist(path)?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    if let Ok(result) = serde_json::from_str::<EvalResult>(&text) {
        return Ok(result.summary);
    }
    serde_json::from_str::<RunSummary>(&text).map_err(|e| {
        CliError::invalid(format!(
            "{}: not an evaluation result or run summary: {e}",
            path.display()
        ))
    })
}

pub fn eval_report(a: &EvalReportArgs) -> CliResult<Report> {
    let format: ReportFormat = parse_flag("format", &a.report_format)?;
    let runs = a
        .inputs
        .iter()
        .map(|p| read_run(p))
        .collect::<CliResult<Vec<_>>>()?;
    let rendered = eval::compare_runs(&runs, format);
    let table = to_json(&eval::ComparisonTable::new(&runs));
    match &a.out {
        Some(out) => {
            std::fs::write(out, &rendered)
                .map_err(|e| CliError::io(format!("{}: {e}", out.display())))?;
            Ok(Report::ok(
                format!("{} runs -> {}\n", runs.len(), out.display()),
                table,
            ))
        }
        None => Ok(Report::ok(rendered, table)),
    }
}

pub fn review_sample(cfg: &PipelineConfig, a: &SampleArgs) -> CliResult<Report> {
    let sets = load_sets(&a.quiz)?;
    let docs = match a.corpus.clone().or_else(|| cfg.paths.corpus.clone()) {
        Some(p) => load_corpus(&p)?,
        None => Vec::new(),
    };
    let sample = eval::sample_for_review(&sets, &docs, a.n, a.seed, a.stratify)
        .map_err(|e| CliError::invalid(e.to_string()))?;
    let out_sets = eval::sample_to_sets(&sample, &sets);
    jsonl::write_entities(&a.out, &out_sets)?;
    Ok(Report::ok(
        format!(
            "{} items from {} sets -> {}\n",
            sample.len(),
            out_sets.len(),
            a.out.display()
        ),
        json!({"items": sample.len(), "sets": out_sets.len(), "seed": a.seed, "stratify": a.stratify}),
    ))
}

async fn until_interrupted() {
    if let Err(e) = tokio::signal::ctrl_c().await {
        eprintln!("cannot listen for Ctrl-C: {e}");
        std::future::pending::<()>().await;
    }
}

pub async fn review_serve(
    cfg: &PipelineConfig,
    a: &ServeArgs,
    json_mode: bool,
) -> CliResult<Report> {
    let sets = load_sets(&a.quiz)?;
    let docs = match a.corpus.clone().or_else(|| cfg.paths.corpus.clone()) {
        Some(p) => load_corpus(&p)?,
        None => Vec::new(),
    };
    if let Some(dir) = &a.static_dir {
        must_exist(dir)?;
    }
    let store = AnnotationStore::open(&a.store).map_err(|e| match e {
        eval::StoreError::Io(e) => CliError::from(e),
        other => CliError::invalid(other.to_string()),
    })?;
    let state = Arc::new(server::ReviewState::new(&sets, &docs, store));
    let items = state.len();
    let (addr, handle) =
        server::spawn(SocketAddr::new(a.host, a.port), state, a.static_dir.clone()).await?;
    announce(
        json_mode,
        json!({"listening": format!("http://{addr}"), "items": items}),
        || format!("review server on http://{addr} ({items} items); Ctrl-C to stop"),
    );
    tokio::select! {
        _ = until_interrupted() => {}
        _ = handle => return Err(CliError::io("review server stopped unexpectedly")),
    }
    Ok(Report::ok(String::new(), json!({"stopped": true})))
}

pub async fn mock_serve(
    cfg: &PipelineConfig,
    a: &MockServeArgs,
    json_mode: bool,
) -> CliResult<Report> {
    let mut params = cfg.render;
    apply_render(&mut params, a.format.as_deref(), a.num_questions, a.options)?;
    let model = ModelConfig {
        endpoint_url: format!("{}{}", mock::MOCK_SCHEME, a.mode),
        ..ModelConfig::default()
    };
    let backend = mock::backend_for(&model, &params)
        .map_err(|e| CliError::invalid(format!("--mode: {e}")))?;
    let addr = mock::spawn_server(SocketAddr::new(a.host, a.port), backend).await?;
    announce(
        json_mode,
        json!({"listening": format!("http://{addr}/v1"), "mode": a.mode}),
        || {
            format!(
                "mock endpoint on http://{addr}/v1 ({} mode); Ctrl-C to stop",
                a.mode
            )
        },
    );
    until_interrupted().await;
    Ok(Report::ok(String::new(), json!({"stopped": true})))
}

/// Long-running commands print their address as soon as they listen.
fn announce(json_mode: bool, value: Value, text: impl FnOnce() -> String) {
    if json_mode {
        println!("{value}");
    } else {
        println!("{}", text());
    }
}
