//! Model answer layouts: the requested JSON array and the lettered
//! plain-text fallback, in both directions.
//!
//! JSON layout, one object per question:
//!
//! ```text
//! [{"question": "...", "options": {"A": "...", "B": "..."}, "answer": "B"},
//!  {"question": "...", "answer": "short answer"}]
//! ```
//!
//! Lettered layout:
//!
//! ```text
//! 1. Question stem
//! A) first option
//! B) second option
//! Cevap: B
//! ```

use std::collections::HashSet;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::de::{IgnoredAny, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::model::{self, Entity, OptionLabel, Provenance, QuizItem, QuizKind, QuizSet};

/// What the caller asked the model for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub format: QuizKind,
    /// Required option count for MCQs; `None` accepts 2–5.
    pub options_per_question: Option<u8>,
    /// Required question count; `None` accepts any positive count.
    pub num_questions: Option<u32>,
}

impl Expected {
    pub fn format_only(format: QuizKind) -> Expected {
        Expected {
            format,
            options_per_question: None,
            num_questions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseReason {
    InvalidJson {
        message: String,
    },
    NoQuestions,
    MissingStem {
        question: usize,
    },
    MissingAnswer {
        question: usize,
    },
    DuplicateLabel {
        question: usize,
        label: String,
    },
    LabelOutOfRange {
        question: usize,
        label: String,
    },
    LabelOrder {
        question: usize,
        label: String,
    },
    QuestionCountMismatch {
        expected: u32,
        found: usize,
    },
    OptionCountMismatch {
        question: usize,
        expected: u8,
        found: usize,
    },
    UnexpectedOptions {
        question: usize,
    },
    InvalidItem {
        question: usize,
        message: String,
    },
}

impl fmt::Display for ParseReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseReason::InvalidJson { message } => write!(f, "invalid JSON: {message}"),
            ParseReason::NoQuestions => f.write_str("no questions found"),
            ParseReason::MissingStem { question } => write!(f, "question {question}: missing stem"),
            ParseReason::MissingAnswer { question } => {
                write!(f, "question {question}: missing answer line")
            }
            ParseReason::DuplicateLabel { question, label } => {
                write!(f, "question {question}: duplicate option label {label}")
            }
            ParseReason::LabelOutOfRange { question, label } => {
                write!(f, "question {question}: label {label} out of range")
            }
            ParseReason::LabelOrder { question, label } => {
                write!(
                    f,
                    "question {question}: option {label} out of alphabetical order"
                )
            }
            ParseReason::QuestionCountMismatch { expected, found } => {
                write!(f, "expected {expected} questions, found {found}")
            }
            ParseReason::OptionCountMismatch {
                question,
                expected,
                found,
            } => {
                write!(
                    f,
                    "question {question}: expected {expected} options, found {found}"
                )
            }
            ParseReason::UnexpectedOptions { question } => {
                write!(
                    f,
                    "question {question}: options present in a short-answer question"
                )
            }
            ParseReason::InvalidItem { question, message } => {
                write!(f, "question {question}: {message}")
            }
        }
    }
}

/// Parse failure with the byte offset (into the raw text) where it was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("at byte {offset}: {reason}")]
pub struct ParseError {
    pub offset: usize,
    pub reason: ParseReason,
}

fn err(offset: usize, reason: ParseReason) -> ParseError {
    ParseError { offset, reason }
}

/// A question as read from model text, before labels are validated.
#[derive(Debug, Clone, PartialEq)]
struct Draft {
    offset: usize,
    stem: String,
    options: Vec<(String, String, usize)>,
    answer: Option<(String, usize)>,
}

/// Renders items in the JSON layout (pretty, UTF-8).
pub fn format_json(items: &[QuizItem]) -> String {
    let values: Vec<Value> = items
        .iter()
        .map(|item| match item.kind {
            QuizKind::Mcq => {
                let mut options = serde_json::Map::new();
                for o in item.options() {
                    options.insert(o.label.to_string(), Value::String(o.text.clone()));
                }
                serde_json::json!({
                    "question": item.stem,
                    "options": options,
                    "answer": item.correct_label.map(|l| l.to_string()).unwrap_or_default(),
                })
            }
            QuizKind::Saq => serde_json::json!({
                "question": item.stem,
                "answer": item.answer_text.clone().unwrap_or_default(),
            }),
        })
        .collect();
    serde_json::to_string_pretty(&values).expect("JSON values serialize")
}

/// Renders items in the lettered layout with `Cevap:` answer lines.
pub fn format_lettered(items: &[QuizItem]) -> String {
    let mut out = String::new();
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("{}. {}\n", i + 1, item.stem));
        match item.kind {
            QuizKind::Mcq => {
                for o in item.options() {
                    out.push_str(&format!("{}) {}\n", o.label, o.text));
                }
                if let Some(label) = item.correct_label {
                    out.push_str(&format!("Cevap: {label}\n"));
                }
            }
            QuizKind::Saq => {
                out.push_str(&format!(
                    "Cevap: {}\n",
                    item.answer_text.as_deref().unwrap_or_default()
                ));
            }
        }
    }
    out
}

/// Parses model output into a validated quiz set. Tries the JSON layout
/// first (bare, fenced, or embedded between brackets) and falls back to
/// the lettered layout.
pub fn parse_quiz(
    raw: &str,
    expected: &Expected,
    doc_id: &str,
    provenance: Provenance,
) -> Result<QuizSet, ParseError> {
    let drafts = match json_candidate(raw) {
        Some((start, candidate)) => match serde_json::from_str::<IgnoredAny>(candidate) {
            Ok(_) => parse_json_drafts(start, candidate)?,
            Err(json_err) => {
                let lettered = parse_lettered_drafts(raw)?;
                if lettered.is_empty() {
                    return Err(err(
                        start + line_col_offset(candidate, json_err.line(), json_err.column()),
                        ParseReason::InvalidJson {
                            message: json_err.to_string(),
                        },
                    ));
                }
                lettered
            }
        },
        None => parse_lettered_drafts(raw)?,
    };
    build_set(drafts, expected, doc_id, provenance)
}

fn line_col_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

static FENCE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)```[A-Za-z]*[ \t]*\n(.*?)```").unwrap());

/// Locates the JSON part of a response, with its byte offset in `raw`.
fn json_candidate(raw: &str) -> Option<(usize, &str)> {
    if let Some(caps) = FENCE.captures(raw) {
        let m = caps.get(1)?;
        let inner = m.as_str();
        let trimmed = inner.trim_start();
        if trimmed.starts_with('[') || trimmed.starts_with('{') {
            let start = m.start() + (inner.len() - trimmed.len());
            return Some((start, trimmed.trim_end()));
        }
    }
    let trimmed = raw.trim_start();
    if trimmed.starts_with('[') || trimmed.starts_with('{') {
        let start = raw.len() - trimmed.len();
        return Some((start, trimmed.trim_end()));
    }
    let open = raw.find('[')?;
    let close = raw.rfind(']')?;
    (close > open
        && raw[open..]
            .trim_start_matches('[')
            .trim_start()
            .starts_with('{'))
    .then(|| (open, &raw[open..=close]))
}

/// Map entries in source order, duplicates kept.
#[derive(Debug, Default)]
struct Pairs(Vec<(String, Value)>);

impl<'de> Deserialize<'de> for Pairs {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct PairsVisitor;
        impl<'de> Visitor<'de> for PairsVisitor {
            type Value = Pairs;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Pairs, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Value>()? {
                    out.push((k, v));
                }
                Ok(Pairs(out))
            }
        }
        deserializer.deserialize_map(PairsVisitor)
    }
}

const STEM_KEYS: [&str; 4] = ["question", "stem", "soru", "soru_metni"];
const OPTION_KEYS: [&str; 5] = ["options", "choices", "secenekler", "seçenekler", "şıklar"];
const ANSWER_KEYS: [&str; 7] = [
    "answer",
    "correct_label",
    "correct",
    "correct_answer",
    "cevap",
    "dogru_cevap",
    "doğru_cevap",
];
const LIST_KEYS: [&str; 4] = ["questions", "sorular", "items", "quiz"];

fn value_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn find<'a>(pairs: &'a [(String, Value)], keys: &[&str]) -> Option<&'a Value> {
    pairs
        .iter()
        .find(|(k, _)| keys.contains(&k.to_lowercase().as_str()))
        .map(|(_, v)| v)
}

fn parse_json_drafts(start: usize, candidate: &str) -> Result<Vec<Draft>, ParseError> {
    let invalid = |message: String| err(start, ParseReason::InvalidJson { message });
    // Object entries are read as ordered pairs so duplicate labels stay visible.
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Top {
        List(Vec<Pairs>),
        Object(Pairs),
    }
    let top: Top = serde_json::from_str(candidate).map_err(|e| invalid(e.to_string()))?;
    let objects: Vec<Pairs> = match top {
        Top::List(items) => items,
        Top::Object(pairs) => match find(&pairs.0, &LIST_KEYS) {
            Some(list @ Value::Array(_)) => {
                let text = list.to_string();
                serde_json::from_str::<Vec<Pairs>>(&text).map_err(|e| invalid(e.to_string()))?
            }
            _ => vec![pairs],
        },
    };
    // Nested option objects come through `Value`, which merges duplicate
    // keys; re-read them as pairs from the original text when needed.
    let mut drafts = Vec::with_capacity(objects.len());
    for (i, Pairs(pairs)) in objects.into_iter().enumerate() {
        let question = i + 1;
        let stem = find(&pairs, &STEM_KEYS)
            .and_then(value_text)
            .unwrap_or_default();
        let mut options = Vec::new();
        match find(&pairs, &OPTION_KEYS) {
            None | Some(Value::Null) => {}
            Some(Value::Object(_)) => {
                let raw_options = option_pairs(candidate, i).unwrap_or_default();
                for (label, value) in raw_options {
                    options.push((
                        label.trim().to_string(),
                        value_text(&value).unwrap_or_default(),
                        start,
                    ));
                }
            }
            Some(Value::Array(list)) => {
                for (j, entry) in list.iter().enumerate() {
                    let default_label = OptionLabel::from_index(j)
                        .map(|l| l.to_string())
                        .unwrap_or_else(|| ((b'A' + j as u8) as char).to_string());
                    match entry {
                        Value::Object(obj) => {
                            let label = obj
                                .get("label")
                                .and_then(value_text)
                                .unwrap_or(default_label);
                            let text = obj.get("text").and_then(value_text).unwrap_or_default();
                            options.push((label, text, start));
                        }
                        other => {
                            let text = value_text(other).unwrap_or_default();
                            let (label, text) =
                                split_labeled_option(&text).unwrap_or((default_label, text));
                            options.push((label, text, start));
                        }
                    }
                }
            }
            Some(_) => {
                return Err(invalid(format!(
                    "question {question}: options must be an object or array"
                )))
            }
        }
        let answer = find(&pairs, &ANSWER_KEYS)
            .and_then(value_text)
            .map(|a| (a, start));
        drafts.push(Draft {
            offset: start,
            stem,
            options,
            answer,
        });
    }
    Ok(drafts)
}

/// Options object of the `index`-th question, entries in source order.
fn option_pairs(candidate: &str, index: usize) -> Option<Vec<(String, Value)>> {
    #[derive(Deserialize)]
    struct Item {
        #[serde(
            alias = "choices",
            alias = "secenekler",
            alias = "seçenekler",
            alias = "şıklar",
            alias = "Options"
        )]
        options: Option<Pairs>,
    }
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Top {
        List(Vec<Item>),
        Wrapped {
            #[serde(alias = "sorular", alias = "items", alias = "quiz")]
            questions: Vec<Item>,
        },
        Single(Item),
    }
    let items = match serde_json::from_str::<Top>(candidate).ok()? {
        Top::List(items) | Top::Wrapped { questions: items } => items,
        Top::Single(item) => vec![item],
    };
    items.into_iter().nth(index)?.options.map(|p| p.0)
}

/// `"B) metin"` → `("B", "metin")`.
fn split_labeled_option(text: &str) -> Option<(String, String)> {
    let caps = OPTION_LINE.captures(text)?;
    Some((caps[1].to_string(), caps[2].trim().to_string()))
}

static QUESTION_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?i:soru\s*)?(\d{1,3})\s*[.):]\s+(\S.*)$").unwrap());
static OPTION_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([A-Ea-e])\)\s*(.*)$|^([A-E])\.\s+(.*)$").unwrap());
static BAD_OPTION_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([F-Zf-z])\)\s+\S").unwrap());
static ANSWER_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?i:doğru\s+cevap|dogru\s+cevap|cevap)\s*[:：]\s*(.*)$").unwrap()
});

fn option_caps(line: &str) -> Option<(String, String)> {
    let caps = OPTION_LINE.captures(line)?;
    let (label, text) = match (caps.get(1), caps.get(2), caps.get(3), caps.get(4)) {
        (Some(l), Some(t), _, _) | (_, _, Some(l), Some(t)) => (l.as_str(), t.as_str()),
        _ => return None,
    };
    Some((label.to_ascii_uppercase(), text.trim().to_string()))
}

fn parse_lettered_drafts(raw: &str) -> Result<Vec<Draft>, ParseError> {
    #[derive(PartialEq)]
    enum State {
        Preamble,
        Stem,
        Options,
        Answered,
    }
    let mut drafts: Vec<Draft> = Vec::new();
    let mut state = State::Preamble;
    let mut offset = 0;
    for raw_line in raw.split_inclusive('\n') {
        let line_offset = offset;
        offset += raw_line.len();
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let line = line
            .trim_start_matches(['*', '#', ' '])
            .trim_end_matches('*')
            .trim();
        if let Some(caps) = QUESTION_LINE.captures(line) {
            drafts.push(Draft {
                offset: line_offset,
                stem: caps[2].trim().to_string(),
                options: Vec::new(),
                answer: None,
            });
            state = State::Stem;
            continue;
        }
        if state == State::Preamble {
            continue;
        }
        let current = drafts.last_mut().expect("a question is open");
        if let Some(caps) = ANSWER_LINE.captures(line) {
            current.answer = Some((caps[1].trim().to_string(), line_offset));
            state = State::Answered;
            continue;
        }
        if state == State::Answered {
            continue;
        }
        if let Some((label, text)) = option_caps(line) {
            current.options.push((label, text, line_offset));
            state = State::Options;
            continue;
        }
        if let Some(caps) = BAD_OPTION_LINE.captures(line) {
            if state == State::Options {
                return Err(err(
                    line_offset,
                    ParseReason::LabelOutOfRange {
                        question: drafts.len(),
                        label: caps[1].to_ascii_uppercase(),
                    },
                ));
            }
        }
        match state {
            State::Stem => {
                current.stem.push('\n');
                current.stem.push_str(line);
            }
            State::Options => {
                if let Some(last) = current.options.last_mut() {
                    last.1.push(' ');
                    last.1.push_str(line);
                }
            }
            _ => {}
        }
    }
    Ok(drafts)
}

fn resolve_label(answer: &str, options: &[(String, String, usize)]) -> Option<String> {
    let answer = answer.trim();
    if let Some((label, _, _)) = options.iter().find(|(_, text, _)| text.trim() == answer) {
        return Some(label.clone());
    }
    let mut chars = answer.chars();
    let first = chars.next()?;
    let rest = chars.as_str();
    let lettered =
        rest.is_empty() || rest.starts_with([')', '.']) || rest.starts_with(char::is_whitespace);
    (first.is_ascii_alphabetic() && lettered).then(|| first.to_ascii_uppercase().to_string())
}

fn build_set(
    drafts: Vec<Draft>,
    expected: &Expected,
    doc_id: &str,
    provenance: Provenance,
) -> Result<QuizSet, ParseError> {
    if drafts.is_empty() {
        return Err(err(0, ParseReason::NoQuestions));
    }
    let mut items = Vec::with_capacity(drafts.len());
    for (i, draft) in drafts.iter().enumerate() {
        let question = i + 1;
        if draft.stem.trim().is_empty() {
            return Err(err(draft.offset, ParseReason::MissingStem { question }));
        }
        let (answer, answer_offset) = match &draft.answer {
            Some((a, off)) if !a.is_empty() => (a.as_str(), *off),
            _ => return Err(err(draft.offset, ParseReason::MissingAnswer { question })),
        };
        let id = model::item_id(doc_id, i);
        let item = match expected.format {
            QuizKind::Saq => {
                if !draft.options.is_empty() {
                    return Err(err(
                        draft.offset,
                        ParseReason::UnexpectedOptions { question },
                    ));
                }
                QuizItem::saq(id, draft.stem.trim(), answer)
            }
            QuizKind::Mcq => {
                let mut seen = HashSet::new();
                for (j, (label, _, off)) in draft.options.iter().enumerate() {
                    let Some(parsed) = label
                        .chars()
                        .next()
                        .and_then(OptionLabel::from_char)
                        .filter(|_| label.len() == 1)
                    else {
                        return Err(err(
                            *off,
                            ParseReason::LabelOutOfRange {
                                question,
                                label: label.clone(),
                            },
                        ));
                    };
                    if !seen.insert(parsed) {
                        return Err(err(
                            *off,
                            ParseReason::DuplicateLabel {
                                question,
                                label: label.clone(),
                            },
                        ));
                    }
                    if parsed.index() != j {
                        return Err(err(
                            *off,
                            ParseReason::LabelOrder {
                                question,
                                label: label.clone(),
                            },
                        ));
                    }
                }
                if let Some(k) = expected.options_per_question {
                    if draft.options.len() != k as usize {
                        return Err(err(
                            draft.offset,
                            ParseReason::OptionCountMismatch {
                                question,
                                expected: k,
                                found: draft.options.len(),
                            },
                        ));
                    }
                }
                let label = resolve_label(answer, &draft.options)
                    .ok_or_else(|| err(answer_offset, ParseReason::MissingAnswer { question }))?;
                let correct = label
                    .chars()
                    .next()
                    .and_then(OptionLabel::from_char)
                    .filter(|l| l.index() < draft.options.len())
                    .ok_or_else(|| {
                        err(
                            answer_offset,
                            ParseReason::LabelOutOfRange {
                                question,
                                label: label.clone(),
                            },
                        )
                    })?;
                let texts = draft
                    .options
                    .iter()
                    .map(|(_, t, _)| t.trim().to_string())
                    .collect();
                QuizItem::mcq(id, draft.stem.trim(), texts, correct)
            }
        };
        let mut item = item;
        item.normalize();
        if let Err(e) = item.validate() {
            return Err(err(
                draft.offset,
                ParseReason::InvalidItem {
                    question,
                    message: e.to_string(),
                },
            ));
        }
        items.push(item);
    }
    if let Some(n) = expected.num_questions {
        if items.len() != n as usize {
            return Err(err(
                0,
                ParseReason::QuestionCountMismatch {
                    expected: n,
                    found: items.len(),
                },
            ));
        }
    }
    let set = QuizSet {
        doc_id: doc_id.to_string(),
        format: expected.format,
        items,
        provenance,
    };
    set.validate().map_err(|e| {
        err(
            0,
            ParseReason::InvalidItem {
                question: 0,
                message: e.to_string(),
            },
        )
    })?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            model: "m".into(),
            endpoint: "mock://quiz".into(),
            temperature: 0.7,
            generated_at: "2024-01-01T00:00:00Z".parse().unwrap(),
            notes: vec![],
        }
    }

    fn mcq(n: u32, k: u8) -> Expected {
        Expected {
            format: QuizKind::Mcq,
            options_per_question: Some(k),
            num_questions: Some(n),
        }
    }

    fn five_mcqs_json() -> String {
        let items: Vec<Value> = (0..5)
            .map(|i| {
                serde_json::json!({
                    "question": format!("Soru {i}?"),
                    "options": {"A": format!("a{i}"), "B": format!("b{i}"), "C": format!("c{i}"), "D": format!("d{i}")},
                    "answer": "C",
                })
            })
            .collect();
        serde_json::to_string(&items).unwrap()
    }

    #[test]
    fn parses_five_json_mcqs() {
        let set = parse_quiz(&five_mcqs_json(), &mcq(5, 4), "doc", prov()).unwrap();
        assert_eq!(set.items.len(), 5);
        assert_eq!(set.items[3].item_id, "doc#3");
        assert_eq!(set.items[3].correct_option().unwrap().text, "c3");
    }

    #[test]
    fn parses_fenced_json_with_preamble() {
        let raw = format!(
            "İşte sorular:\n```json\n{}\n```\nBaşarılar!",
            five_mcqs_json()
        );
        assert_eq!(
            parse_quiz(&raw, &mcq(5, 4), "doc", prov())
                .unwrap()
                .items
                .len(),
            5
        );
        let raw = format!("Sorular şöyle: {} bitti", five_mcqs_json());
        assert_eq!(
            parse_quiz(&raw, &mcq(5, 4), "doc", prov())
                .unwrap()
                .items
                .len(),
            5
        );
    }

    #[test]
    fn parses_lettered_mcq() {
        let raw = "1. Soru?\nA) x\nB) y\nCevap: B\n";
        let set = parse_quiz(raw, &Expected::format_only(QuizKind::Mcq), "d", prov()).unwrap();
        assert_eq!(set.items.len(), 1);
        assert_eq!(set.items[0].correct_label, Some(OptionLabel::B));
        assert_eq!(set.items[0].stem, "Soru?");
    }

    #[test]
    fn lettered_answer_out_of_range() {
        let raw = "1. Soru?\nA) w\nB) x\nC) y\nD) z\nCevap: F\n";
        let e = parse_quiz(raw, &Expected::format_only(QuizKind::Mcq), "d", prov()).unwrap_err();
        assert!(
            matches!(e.reason, ParseReason::LabelOutOfRange { ref label, .. } if label == "F"),
            "{e}"
        );
        assert_eq!(e.offset, raw.find("Cevap").unwrap());
    }

    #[test]
    fn lettered_missing_answer() {
        let raw = "1. Soru?\nA) x\nB) y\n\n2. İkinci?\nA) p\nB) q\nDoğru Cevap: A";
        let e = parse_quiz(raw, &Expected::format_only(QuizKind::Mcq), "d", prov()).unwrap_err();
        assert_eq!(e.reason, ParseReason::MissingAnswer { question: 1 });
        assert_eq!(e.offset, 0);
    }

    #[test]
    fn lettered_duplicate_label() {
        let raw = "1. Soru?\nA) x\nA) y\nCevap: A";
        let e = parse_quiz(raw, &Expected::format_only(QuizKind::Mcq), "d", prov()).unwrap_err();
        assert!(matches!(e.reason, ParseReason::DuplicateLabel { .. }));
        assert_eq!(e.offset, raw.find("A) y").unwrap());
    }

    #[test]
    fn json_duplicate_label_is_detected() {
        let raw = r#"[{"question": "S?", "options": {"A": "x", "A": "y"}, "answer": "A"}]"#;
        let e = parse_quiz(raw, &Expected::format_only(QuizKind::Mcq), "d", prov()).unwrap_err();
        assert!(
            matches!(e.reason, ParseReason::DuplicateLabel { .. }),
            "{e}"
        );
    }

    #[test]
    fn count_mismatches() {
        let e = parse_quiz(&five_mcqs_json(), &mcq(4, 4), "d", prov()).unwrap_err();
        assert_eq!(
            e.reason,
            ParseReason::QuestionCountMismatch {
                expected: 4,
                found: 5
            }
        );
        let e = parse_quiz(&five_mcqs_json(), &mcq(5, 5), "d", prov()).unwrap_err();
        assert!(matches!(
            e.reason,
            ParseReason::OptionCountMismatch {
                expected: 5,
                found: 4,
                ..
            }
        ));
    }

    #[test]
    fn garbage_is_rejected() {
        let e = parse_quiz(
            "Üzgünüm, bu metinden soru üretemiyorum.",
            &mcq(5, 5),
            "d",
            prov(),
        )
        .unwrap_err();
        assert_eq!(e.reason, ParseReason::NoQuestions);
        let e = parse_quiz("[{\"question\": \"x\", ", &mcq(5, 5), "d", prov()).unwrap_err();
        assert!(matches!(e.reason, ParseReason::InvalidJson { .. }));
    }

    #[test]
    fn saq_both_layouts() {
        let raw = r#"[{"question": "Başkent neresidir?", "answer": "Ankara"}]"#;
        let set = parse_quiz(raw, &Expected::format_only(QuizKind::Saq), "d", prov()).unwrap();
        assert_eq!(set.items[0].answer_text.as_deref(), Some("Ankara"));
        let raw =
            "Sorular:\n1) Başkent neresidir?\nCevap: Ankara\n2) En uzun nehir?\nCevap: Kızılırmak";
        let set = parse_quiz(raw, &Expected::format_only(QuizKind::Saq), "d", prov()).unwrap();
        assert_eq!(set.items.len(), 2);
        assert_eq!(set.items[1].answer_text.as_deref(), Some("Kızılırmak"));
    }

    #[test]
    fn answer_given_as_option_text() {
        let raw = "1. Soru?\nA) x\nB) y\nCevap: y";
        let set = parse_quiz(raw, &Expected::format_only(QuizKind::Mcq), "d", prov()).unwrap();
        assert_eq!(set.items[0].correct_label, Some(OptionLabel::B));
        let raw = "1. Soru?\nA) x\nB) y\nCevap: B) y";
        let set = parse_quiz(raw, &Expected::format_only(QuizKind::Mcq), "d", prov()).unwrap();
        assert_eq!(set.items[0].correct_label, Some(OptionLabel::B));
    }

    #[test]
    fn option_arrays_are_labelled_in_order() {
        let raw = r#"{"questions": [{"soru": "S?", "secenekler": ["A) bir", "B) iki", "C) üç"], "cevap": "C"}]}"#;
        let set = parse_quiz(raw, &Expected::format_only(QuizKind::Mcq), "d", prov()).unwrap();
        assert_eq!(set.items[0].answer(), Some("üç"));
    }

    #[test]
    fn format_then_parse_both_layouts() {
        let items = vec![
            QuizItem::mcq(
                "d#0",
                "Birinci soru?",
                vec!["x".into(), "y".into(), "z".into()],
                OptionLabel::C,
            ),
            QuizItem::mcq(
                "d#1",
                "İkinci soru?",
                vec!["p".into(), "q".into()],
                OptionLabel::A,
            ),
        ];
        for text in [format_json(&items), format_lettered(&items)] {
            let set =
                parse_quiz(&text, &Expected::format_only(QuizKind::Mcq), "d", prov()).unwrap();
            assert_eq!(set.items, items);
        }
    }
}
