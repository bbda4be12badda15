//! ROUGE-1/2/L with Turkish-aware tokenization and the ROUGE-L faithfulness
//! gate that checks generated questions against their source passage.
//!
//! ROUGE-N uses clipped (multiset) n-gram counts. ROUGE-L uses the longest
//! common subsequence over the whole token sequence. F is the balanced
//! F-measure, computed as `2·overlap / (|cand| + |ref|)`, which equals
//! `2PR / (P + R)` whenever the overlap is non-zero.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::model::{QuizKind, QuizSet, SourceDocument};

/// NFC, Turkish casing (`İ`→`i`, `I`→`ı`), lowercase, then maximal
/// alphanumeric runs. Punctuation never appears in the output.
pub fn normalize_tr(text: &str) -> Vec<String> {
    let mut lowered = String::with_capacity(text.len());
    for c in text.nfc() {
        match c {
            'İ' => lowered.push('i'),
            'I' => lowered.push('ı'),
            c => lowered.extend(c.to_lowercase()),
        }
    }
    // Lowercasing can emit combining marks (e.g. U+0307), so recompose.
    let lowered: String = lowered.nfc().collect();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    /// Scores from a match count and the two sequence sizes.
    pub fn from_counts(
        matched: usize,
        candidate_total: usize,
        reference_total: usize,
    ) -> RougeScore {
        if matched == 0 || candidate_total == 0 || reference_total == 0 {
            return RougeScore::default();
        }
        RougeScore {
            precision: matched as f64 / candidate_total as f64,
            recall: matched as f64 / reference_total as f64,
            f1: 2.0 * matched as f64 / (candidate_total + reference_total) as f64,
        }
    }

    /// Same score on the 0–100 scale used in result tables.
    pub fn percent(&self) -> RougeScore {
        RougeScore {
            precision: self.precision * 100.0,
            recall: self.recall * 100.0,
            f1: self.f1 * 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeReport {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    #[serde(rename = "rougeL")]
    pub rouge_l: RougeScore,
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// ROUGE-N with clipped n-gram counts.
pub fn rouge_n<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> RougeScore {
    assert!(n >= 1, "n-gram order must be at least 1");
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let matched: usize = cand
        .iter()
        .map(|(gram, &c)| refs.get(gram).map_or(0, |&r| c.min(r)))
        .sum();
    let cand_total = candidate.len().saturating_sub(n - 1);
    let ref_total = reference.len().saturating_sub(n - 1);
    RougeScore::from_counts(matched, cand_total, ref_total)
}

/// Length of the longest common subsequence, O(|a|·|b|) time, O(min) space.
pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut row = vec![0usize; short.len() + 1];
    for x in long {
        let mut diag = 0;
        for (j, y) in short.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { above.max(row[j]) };
            diag = above;
        }
    }
    row[short.len()]
}

/// ROUGE-L over whole token sequences.
pub fn rouge_l<T: Eq>(candidate: &[T], reference: &[T]) -> RougeScore {
    RougeScore::from_counts(
        lcs_len(candidate, reference),
        candidate.len(),
        reference.len(),
    )
}

pub fn rouge_report<T: Eq + Hash>(candidate: &[T], reference: &[T]) -> RougeReport {
    RougeReport {
        rouge1: rouge_n(candidate, reference, 1),
        rouge2: rouge_n(candidate, reference, 2),
        rouge_l: rouge_l(candidate, reference),
    }
}

/// Normalizes both texts with [`normalize_tr`] and scores them.
pub fn score_texts(candidate: &str, reference: &str) -> RougeReport {
    rouge_report(&normalize_tr(candidate), &normalize_tr(reference))
}

/// What text of a quiz item is compared against the source passage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateMode {
    /// Stem, plus option texts (MCQ) or the answer (SAQ).
    #[default]
    StemWithOptions,
    StemOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("quiz set references document `{quiz_doc}` but `{doc}` was supplied")]
    DocMismatch { quiz_doc: String, doc: String },
}

/// Mean F1 values over a set of scored items.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanF1 {
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
}

impl MeanF1 {
    /// Arithmetic means; zero for an empty input.
    pub fn of<'a>(reports: impl IntoIterator<Item = &'a RougeReport>) -> MeanF1 {
        let (mut n, mut sum) = (0usize, MeanF1::default());
        for r in reports {
            n += 1;
            sum.rouge1 += r.rouge1.f1;
            sum.rouge2 += r.rouge2.f1;
            sum.rouge_l += r.rouge_l.f1;
        }
        if n == 0 {
            return MeanF1::default();
        }
        MeanF1 {
            rouge1: sum.rouge1 / n as f64,
            rouge2: sum.rouge2 / n as f64,
            rouge_l: sum.rouge_l / n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemScore {
    pub item_id: String,
    pub report: RougeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizScores {
    pub doc_id: String,
    pub items: Vec<ItemScore>,
    pub mean_f1: MeanF1,
}

pub fn item_candidate_text(item: &crate::model::QuizItem, mode: CandidateMode) -> String {
    let mut parts = vec![item.stem.as_str()];
    if mode == CandidateMode::StemWithOptions {
        match item.kind {
            QuizKind::Mcq => parts.extend(item.options().iter().map(|o| o.text.as_str())),
            QuizKind::Saq => parts.extend(item.answer_text.as_deref()),
        }
    }
    parts.join(" ")
}

/// Scores every item of a set against its source document body.
pub fn score_quiz(
    qs: &QuizSet,
    doc: &SourceDocument,
    mode: CandidateMode,
) -> Result<QuizScores, ScoreError> {
    if qs.doc_id != doc.id {
        return Err(ScoreError::DocMismatch {
            quiz_doc: qs.doc_id.clone(),
            doc: doc.id.clone(),
        });
    }
    let reference = normalize_tr(&doc.body);
    let items: Vec<ItemScore> = qs
        .items
        .iter()
        .map(|item| ItemScore {
            item_id: item.item_id.clone(),
            report: rouge_report(&normalize_tr(&item_candidate_text(item, mode)), &reference),
        })
        .collect();
    let mean_f1 = MeanF1::of(items.iter().map(|i| &i.report));
    Ok(QuizScores {
        doc_id: qs.doc_id.clone(),
        items,
        mean_f1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateAggregate {
    /// The set passes only if every item passes.
    PerItem,
    /// The set passes if its mean ROUGE-L F1 is within bounds.
    #[default]
    MeanOverSet,
}

impl std::str::FromStr for GateAggregate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-item" | "per_item" | "item" => Ok(GateAggregate::PerItem),
            "mean" | "mean-over-set" | "mean_over_set" => Ok(GateAggregate::MeanOverSet),
            other => Err(format!(
                "unknown gate aggregate `{other}` (expected per-item or mean)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    pub min_rouge_l: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rouge_l: Option<f64>,
    #[serde(default)]
    pub aggregate: GateAggregate,
    #[serde(default)]
    pub candidate: CandidateMode,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            min_rouge_l: 0.05,
            max_rouge_l: None,
            aggregate: GateAggregate::default(),
            candidate: CandidateMode::default(),
        }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<(), String> {
        let in_unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !in_unit(self.min_rouge_l) {
            return Err(format!(
                "gate minimum {} is outside [0, 1]",
                self.min_rouge_l
            ));
        }
        if let Some(max) = self.max_rouge_l {
            if !in_unit(max) {
                return Err(format!("gate maximum {max} is outside [0, 1]"));
            }
            if self.min_rouge_l >= max {
                return Err(format!(
                    "gate minimum {} must be below maximum {max}",
                    self.min_rouge_l
                ));
            }
        }
        Ok(())
    }

    /// Inclusive bounds check on a ROUGE-L F1 value.
    pub fn admits(&self, rouge_l_f1: f64) -> bool {
        rouge_l_f1 >= self.min_rouge_l && self.max_rouge_l.is_none_or(|max| rouge_l_f1 <= max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemVerdict {
    pub item_id: String,
    pub rouge_l_f1: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub doc_id: String,
    pub items: Vec<ItemVerdict>,
    pub passed: bool,
    pub scores: QuizScores,
}

pub fn quality_gate(
    qs: &QuizSet,
    doc: &SourceDocument,
    cfg: &GateConfig,
) -> Result<GateResult, ScoreError> {
    let scores = score_quiz(qs, doc, cfg.candidate)?;
    Ok(apply_gate(scores, cfg))
}

/// Applies the thresholds to already computed scores.
pub fn apply_gate(scores: QuizScores, cfg: &GateConfig) -> GateResult {
    let items: Vec<ItemVerdict> = scores
        .items
        .iter()
        .map(|s| ItemVerdict {
            item_id: s.item_id.clone(),
            rouge_l_f1: s.report.rouge_l.f1,
            passed: cfg.admits(s.report.rouge_l.f1),
        })
        .collect();
    let passed = match cfg.aggregate {
        GateAggregate::PerItem => items.iter().all(|i| i.passed),
        GateAggregate::MeanOverSet => cfg.admits(scores.mean_f1.rouge_l),
    };
    GateResult {
        doc_id: scores.doc_id.clone(),
        items,
        passed,
        scores,
    }
}
