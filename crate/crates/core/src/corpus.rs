//! Raw page ingestion, cleaning, length filtering and corpus statistics.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

use crate::jsonl::{self, IoError, ReadError};
use crate::model::{SourceDocument, Subject};

/// A pre-fetched page before cleaning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub source_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_hint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub raw_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerKind {
    /// Unicode (UAX #29) words that contain at least one alphanumeric char.
    #[default]
    UnicodeWords,
    WhitespaceSplit,
}

impl std::str::FromStr for TokenizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unicode_words" | "unicode-words" | "words" => Ok(TokenizerKind::UnicodeWords),
            "whitespace_split" | "whitespace-split" | "whitespace" => {
                Ok(TokenizerKind::WhitespaceSplit)
            }
            other => Err(format!("unknown tokenizer `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_tokens: u64,
    pub max_tokens: u64,
    #[serde(default)]
    pub tokenizer: TokenizerKind,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_tokens: 100,
            max_tokens: 3000,
            tokenizer: TokenizerKind::UnicodeWords,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_tokens == 0 || self.max_tokens == 0 {
            return Err("token bounds must be positive".into());
        }
        if self.min_tokens >= self.max_tokens {
            return Err(format!(
                "min_tokens ({}) must be less than max_tokens ({})",
                self.min_tokens, self.max_tokens
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanConfig {
    /// Lines with fewer tokens than this are dropped as fragments.
    pub fragment_min_tokens: usize,
    pub tokenizer: TokenizerKind,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            fragment_min_tokens: 3,
            tokenizer: TokenizerKind::UnicodeWords,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CleanError {
    #[error("nothing left after cleaning")]
    EmptyAfterCleaning,
}

static HTML_COMMENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<!--.*?-->").unwrap());
static HTML_BLOCK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)<(script|style)\b[^>]*>.*?</(script|style)\s*>").unwrap());
static HTML_TAG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"</?[A-Za-z][A-Za-z0-9:-]*(?:\s[^<>]*)?/?>").unwrap());
static HTML_ENTITY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"&(#[0-9]{1,7}|#[xX][0-9a-fA-F]{1,6}|[A-Za-z][A-Za-z0-9]{1,31});").unwrap()
});
/// Scheme- or www-prefixed URLs only; bare dotted words are left alone.
pub static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:\bhttps?://|\bwww\.)\S*").unwrap());
/// Pictographs plus the joiners, modifiers and tags that build emoji sequences.
pub static EMOJI: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"[\p{Extended_Pictographic}\p{Emoji_Modifier}\p{Regional_Indicator}\u{FE0E}\u{FE0F}\u{200D}\u{20E3}\u{E0020}-\u{E007F}]",
    )
    .unwrap()
});
static INLINE_SPACE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[^\S\n]+").unwrap());

fn decode_entity(name: &str) -> Option<String> {
    if let Some(num) = name.strip_prefix('#') {
        let code = match num.strip_prefix(['x', 'X']) {
            Some(hex) => u32::from_str_radix(hex, 16).ok()?,
            None => num.parse().ok()?,
        };
        return char::from_u32(code).map(String::from);
    }
    let decoded = match name {
        "nbsp" | "ensp" | "emsp" | "thinsp" => " ",
        "amp" => "&",
        "lt" => "<",
        "gt" => ">",
        "quot" => "\"",
        "apos" => "'",
        "laquo" => "«",
        "raquo" => "»",
        "ndash" => "–",
        "mdash" => "—",
        "hellip" => "…",
        "rsquo" | "lsquo" => "'",
        "rdquo" | "ldquo" => "\"",
        "ccedil" => "ç",
        "Ccedil" => "Ç",
        "ouml" => "ö",
        "Ouml" => "Ö",
        "uuml" => "ü",
        "Uuml" => "Ü",
        "scedil" => "ş",
        "Scedil" => "Ş",
        "gbreve" => "ğ",
        "Gbreve" => "Ğ",
        "inodot" | "imath" => "ı",
        "Idot" => "İ",
        "acirc" => "â",
        "icirc" => "î",
        "ucirc" => "û",
        "deg" => "°",
        _ => "",
    };
    Some(decoded.to_string())
}

fn clean_pass(text: &str) -> String {
    let text = text.replace("\r\n", "\n").replace('\r', "\n");
    let text = HTML_COMMENT.replace_all(&text, " ");
    let text = HTML_BLOCK.replace_all(&text, " ");
    let text = HTML_TAG.replace_all(&text, " ");
    let text = HTML_ENTITY.replace_all(&text, |caps: &regex::Captures<'_>| {
        decode_entity(&caps[1]).unwrap_or_default()
    });
    let text = URL.replace_all(&text, " ");
    let text = EMOJI.replace_all(&text, " ");
    let text: String = text.nfc().collect();
    let text = INLINE_SPACE.replace_all(&text, " ");
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Cleans raw page text.
///
/// Removes HTML markup and entities, URLs and emoji, collapses whitespace
/// within lines and drops fragment lines. A line counts as a fragment only
/// when some other line of the same text reaches the threshold; text made
/// entirely of short lines is kept whole and left to the length filter.
pub fn clean_text(raw: &str, cfg: &CleanConfig) -> Result<String, CleanError> {
    let mut current = clean_pass(raw);
    for _ in 0..32 {
        let next = clean_pass(&current);
        if next == current {
            break;
        }
        current = next;
    }
    let lines: Vec<&str> = current.lines().collect();
    let long_enough = |l: &&str| token_count(l, cfg.tokenizer) >= cfg.fragment_min_tokens;
    let kept: Vec<&str> = if lines.iter().any(long_enough) {
        lines.into_iter().filter(long_enough).collect()
    } else {
        lines
    };
    let out = kept.join("\n");
    if out.is_empty() {
        Err(CleanError::EmptyAfterCleaning)
    } else {
        Ok(out)
    }
}

pub fn clean(raw: &RawRecord, cfg: &CleanConfig) -> Result<String, CleanError> {
    clean_text(&raw.raw_text, cfg)
}

pub fn token_count(text: &str, tokenizer: TokenizerKind) -> usize {
    match tokenizer {
        TokenizerKind::UnicodeWords => text.unicode_words().count(),
        TokenizerKind::WhitespaceSplit => text.split_whitespace().count(),
    }
}

fn content_id(raw: &RawRecord) -> String {
    let mut hasher = Sha256::new();
    hasher.update(raw.source_url.as_bytes());
    hasher.update(b"\n");
    hasher.update(raw.raw_text.as_bytes());
    format!("doc-{}", &hex::encode(hasher.finalize())[..12])
}

fn default_title(body: &str) -> String {
    let first = body.lines().next().unwrap_or_default();
    if first.chars().count() <= 80 {
        return first.to_string();
    }
    let cut: String = first.chars().take(80).collect();
    match cut.rfind(' ') {
        Some(pos) if pos > 0 => cut[..pos].to_string(),
        _ => cut,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RejectReason {
    EmptyAfterCleaning,
    TooShort { tokens: u64, min: u64 },
    TooLong { tokens: u64, max: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
    pub source_url: String,
    pub reason: RejectReason,
}

/// Cleans raw records into documents. Records that clean to nothing are
/// returned as rejections. Ids are content hashes, deduplicated by suffix.
pub fn ingest(
    records: &[RawRecord],
    clean_cfg: &CleanConfig,
    tokenizer: TokenizerKind,
) -> (Vec<SourceDocument>, Vec<Rejection>) {
    let mut docs = Vec::new();
    let mut rejected = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for raw in records {
        let body = match clean(raw, clean_cfg) {
            Ok(body) => body,
            Err(CleanError::EmptyAfterCleaning) => {
                rejected.push(Rejection {
                    doc_id: None,
                    source_url: raw.source_url.clone(),
                    reason: RejectReason::EmptyAfterCleaning,
                });
                continue;
            }
        };
        let base = content_id(raw);
        let n = seen.entry(base.clone()).or_insert(0);
        let id = if *n == 0 { base } else { format!("{base}-{n}") };
        *n += 1;
        let subject = raw
            .subject_hint
            .as_deref()
            .and_then(Subject::from_hint)
            .unwrap_or_else(|| Subject::Other("Unspecified".into()));
        let title = raw
            .title
            .as_deref()
            .map(|t| t.split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|t| !t.is_empty())
            .map(|t| t.nfc().collect())
            .unwrap_or_else(|| default_title(&body));
        let token_count = token_count(&body, tokenizer) as u64;
        docs.push(SourceDocument {
            id,
            subject,
            title,
            body,
            source_url: Some(raw.source_url.clone()).filter(|u| !u.is_empty()),
            token_count,
        });
    }
    (docs, rejected)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<SourceDocument>,
    pub rejected: Vec<(SourceDocument, RejectReason)>,
}

/// Keeps documents with `min_tokens <= token_count <= max_tokens`, in order.
pub fn filter_docs(docs: Vec<SourceDocument>, cfg: &FilterConfig) -> FilterOutcome {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for doc in docs {
        let tokens = doc.token_count;
        if tokens < cfg.min_tokens {
            rejected.push((
                doc,
                RejectReason::TooShort {
                    tokens,
                    min: cfg.min_tokens,
                },
            ));
        } else if tokens > cfg.max_tokens {
            rejected.push((
                doc,
                RejectReason::TooLong {
                    tokens,
                    max: cfg.max_tokens,
                },
            ));
        } else {
            kept.push(doc);
        }
    }
    FilterOutcome { kept, rejected }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectShare {
    pub subject: Subject,
    pub count: usize,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SubjectHistogram {
    pub total: usize,
    pub subjects: Vec<SubjectShare>,
}

impl SubjectHistogram {
    pub fn count(&self, subject: &Subject) -> usize {
        self.subjects
            .iter()
            .find(|s| &s.subject == subject)
            .map_or(0, |s| s.count)
    }
}

/// Per-subject counts and shares, largest first (ties by subject order).
pub fn subject_distribution<'a>(
    subjects: impl IntoIterator<Item = &'a Subject>,
) -> SubjectHistogram {
    let mut counts: BTreeMap<&Subject, usize> = BTreeMap::new();
    for s in subjects {
        *counts.entry(s).or_default() += 1;
    }
    let total: usize = counts.values().sum();
    let mut subjects: Vec<SubjectShare> = counts
        .into_iter()
        .map(|(subject, count)| SubjectShare {
            subject: subject.clone(),
            count,
            percentage: count as f64 * 100.0 / total as f64,
        })
        .collect();
    subjects.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.subject.cmp(&b.subject))
    });
    SubjectHistogram { total, subjects }
}

pub fn doc_subject_distribution(docs: &[SourceDocument]) -> SubjectHistogram {
    subject_distribution(docs.iter().map(|d| &d.subject))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBucket {
    /// Inclusive lower bound.
    pub start: u64,
    /// Exclusive upper bound.
    pub end: u64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenHistogram {
    pub bucket_width: u64,
    pub buckets: Vec<TokenBucket>,
}

/// Fixed-width buckets from 0 up to the bucket holding the largest count.
pub fn token_histogram(token_counts: &[u64], bucket_width: u64) -> TokenHistogram {
    assert!(bucket_width > 0, "bucket width must be positive");
    let n_buckets = token_counts
        .iter()
        .max()
        .map_or(0, |max| (max / bucket_width + 1) as usize);
    let mut buckets: Vec<TokenBucket> = (0..n_buckets as u64)
        .map(|i| TokenBucket {
            start: i * bucket_width,
            end: (i + 1) * bucket_width,
            count: 0,
        })
        .collect();
    for &tokens in token_counts {
        buckets[(tokens / bucket_width) as usize].count += 1;
    }
    TokenHistogram {
        bucket_width,
        buckets,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub total_tokens: u64,
    pub mean_tokens: f64,
    pub min_tokens: u64,
    pub max_tokens: u64,
    pub subjects: SubjectHistogram,
    pub tokens: TokenHistogram,
}

pub fn corpus_stats(docs: &[SourceDocument], bucket_width: u64) -> CorpusStats {
    let counts: Vec<u64> = docs.iter().map(|d| d.token_count).collect();
    let total: u64 = counts.iter().sum();
    CorpusStats {
        documents: docs.len(),
        total_tokens: total,
        mean_tokens: if docs.is_empty() {
            0.0
        } else {
            total as f64 / docs.len() as f64
        },
        min_tokens: counts.iter().copied().min().unwrap_or(0),
        max_tokens: counts.iter().copied().max().unwrap_or(0),
        subjects: doc_subject_distribution(docs),
        tokens: token_histogram(&counts, bucket_width),
    }
}

/// Loads raw records from a JSONL file, or from a directory holding
/// `.jsonl`, `.json` (one record) and `.txt`/`.html` files. Directory
/// entries are visited in sorted path order; for text files the parent
/// directory name becomes the subject hint.
pub fn load_raw(path: impl AsRef<Path>) -> Result<Vec<RawRecord>, ReadError> {
    let path = path.as_ref();
    let meta = fs::metadata(path).map_err(|e| IoError::new(path, e))?;
    if meta.is_file() {
        return jsonl::read_records(path);
    }
    let mut files = Vec::new();
    collect_files(path, &mut files)?;
    files.sort();
    let mut records = Vec::new();
    for file in files {
        let ext = file
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        match ext.as_str() {
            "jsonl" => records.extend(jsonl::read_records::<RawRecord>(&file)?),
            "json" => records.push(jsonl::read_json::<RawRecord>(&file)?),
            "txt" | "html" | "htm" => {
                let raw_text = fs::read_to_string(&file).map_err(|e| IoError::new(&file, e))?;
                let rel = file.strip_prefix(path).unwrap_or(&file);
                let subject_hint = rel
                    .parent()
                    .and_then(|p| p.file_name())
                    .map(|n| n.to_string_lossy().into_owned());
                records.push(RawRecord {
                    source_url: format!("file:{}", rel.display()),
                    subject_hint,
                    title: None,
                    raw_text,
                });
            }
            _ => {}
        }
    }
    Ok(records)
}

fn collect_files(dir: &Path, out: &mut Vec<std::path::PathBuf>) -> Result<(), IoError> {
    for entry in fs::read_dir(dir).map_err(|e| IoError::new(dir, e))? {
        let entry = entry.map_err(|e| IoError::new(dir, e))?;
        let path = entry.path();
        if entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    #[error("request to {url} failed: {source}")]
    Http {
        url: String,
        #[source]
        source: reqwest::Error,
    },
    #[error("{url} returned HTTP {status}")]
    Status { url: String, status: u16 },
}

/// Fetches one page as a raw record. Markup is left for [`clean`].
pub async fn fetch_raw(
    client: &reqwest::Client,
    url: &str,
    subject_hint: Option<String>,
) -> Result<RawRecord, FetchError> {
    let http = |source| FetchError::Http {
        url: url.to_string(),
        source,
    };
    let response = client.get(url).send().await.map_err(http)?;
    let status = response.status();
    if !status.is_success() {
        return Err(FetchError::Status {
            url: url.to_string(),
            status: status.as_u16(),
        });
    }
    let raw_text = response.text().await.map_err(http)?;
    Ok(RawRecord {
        source_url: url.to_string(),
        subject_hint,
        title: None,
        raw_text,
    })
}
