//! Canonical domain types shared by every pipeline stage.
//!
//! Every entity serializes to compact JSON with a fixed key order (struct
//! declaration order) and NFC-normalized text. [`deserialize`] validates the
//! full set of invariants and reports every violation with a field path.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use unicode_normalization::{is_nfc, UnicodeNormalization};

/// Minimum and maximum number of options on a multiple-choice item.
pub const MIN_OPTIONS: usize = 2;
pub const MAX_OPTIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subject {
    Chemistry,
    Biology,
    Geography,
    Philosophy,
    TurkishLiterature,
    History,
    Other(String),
}

impl Subject {
    pub const KNOWN: [Subject; 6] = [
        Subject::Chemistry,
        Subject::Biology,
        Subject::Geography,
        Subject::Philosophy,
        Subject::TurkishLiterature,
        Subject::History,
    ];

    /// File-name slug used for template lookup.
    pub fn slug(&self) -> String {
        match self {
            Subject::Chemistry => "chemistry".into(),
            Subject::Biology => "biology".into(),
            Subject::Geography => "geography".into(),
            Subject::Philosophy => "philosophy".into(),
            Subject::TurkishLiterature => "turkish_literature".into(),
            Subject::History => "history".into(),
            Subject::Other(label) => slugify(label),
        }
    }

    /// Parses a free-form subject hint (English or Turkish name, or slug).
    /// Unrecognized non-empty hints become `Other`.
    pub fn from_hint(hint: &str) -> Option<Subject> {
        let trimmed = hint.trim();
        if trimmed.is_empty() {
            return None;
        }
        let key = slugify(trimmed);
        let subject = match key.as_str() {
            "chemistry" | "kimya" => Subject::Chemistry,
            "biology" | "biyoloji" => Subject::Biology,
            "geography" | "cografya" => Subject::Geography,
            "philosophy" | "felsefe" => Subject::Philosophy,
            "turkish_literature"
            | "turkishliterature"
            | "turk_edebiyati"
            | "edebiyat"
            | "turk_dili_ve_edebiyati"
            | "literature" => Subject::TurkishLiterature,
            "history" | "tarih" => Subject::History,
            _ => Subject::Other(trimmed.to_string()),
        };
        Some(subject)
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::TurkishLiterature => f.write_str("TurkishLiterature"),
            Subject::Other(label) => write!(f, "Other({label})"),
            other => write!(f, "{other:?}"),
        }
    }
}

/// Lowercase ASCII slug; Turkish letters are folded to their Latin base.
pub fn slugify(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_sep = true;
    for c in text.chars() {
        let folded = match c {
            'ç' | 'Ç' => 'c',
            'ğ' | 'Ğ' => 'g',
            'ı' | 'I' | 'İ' | 'i' => 'i',
            'ö' | 'Ö' => 'o',
            'ş' | 'Ş' => 's',
            'ü' | 'Ü' => 'u',
            c => c.to_ascii_lowercase(),
        };
        if folded.is_ascii_alphanumeric() {
            out.push(folded);
            last_sep = false;
        } else if !last_sep {
            out.push('_');
            last_sep = true;
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub id: String,
    pub subject: Subject,
    pub title: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    pub token_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuizKind {
    #[serde(rename = "MCQ")]
    Mcq,
    #[serde(rename = "SAQ")]
    Saq,
}

impl fmt::Display for QuizKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuizKind::Mcq => "MCQ",
            QuizKind::Saq => "SAQ",
        })
    }
}

impl FromStr for QuizKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mcq" => Ok(QuizKind::Mcq),
            "saq" => Ok(QuizKind::Saq),
            other => Err(format!(
                "unknown quiz format `{other}` (expected mcq or saq)"
            )),
        }
    }
}

/// Option label, A through E.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OptionLabel {
    A,
    B,
    C,
    D,
    E,
}

impl OptionLabel {
    pub const ALL: [OptionLabel; MAX_OPTIONS] = [
        OptionLabel::A,
        OptionLabel::B,
        OptionLabel::C,
        OptionLabel::D,
        OptionLabel::E,
    ];

    pub fn from_index(index: usize) -> Option<OptionLabel> {
        Self::ALL.get(index).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_char(self) -> char {
        (b'A' + self as u8) as char
    }

    pub fn from_char(c: char) -> Option<OptionLabel> {
        match c {
            'A' => Some(OptionLabel::A),
            'B' => Some(OptionLabel::B),
            'C' => Some(OptionLabel::C),
            'D' => Some(OptionLabel::D),
            'E' => Some(OptionLabel::E),
            _ => None,
        }
    }
}

impl fmt::Display for OptionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizOption {
    pub label: OptionLabel,
    pub text: String,
}

/// One question. `options` and `correct_label` are present iff the item is
/// an MCQ; `answer_text` is present iff it is an SAQ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizItem {
    pub item_id: String,
    pub kind: QuizKind,
    pub stem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<QuizOption>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_label: Option<OptionLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_text: Option<String>,
}

/// Stable item id: `doc_id#index`.
pub fn item_id(doc_id: &str, index: usize) -> String {
    format!("{doc_id}#{index}")
}

impl QuizItem {
    /// Builds an MCQ, labelling options A, B, ... in order.
    pub fn mcq(
        item_id: impl Into<String>,
        stem: impl Into<String>,
        options: Vec<String>,
        correct: OptionLabel,
    ) -> QuizItem {
        let options = options
            .into_iter()
            .enumerate()
            .map(|(i, text)| QuizOption {
                label: OptionLabel::from_index(i).unwrap_or(OptionLabel::E),
                text,
            })
            .collect();
        QuizItem {
            item_id: item_id.into(),
            kind: QuizKind::Mcq,
            stem: stem.into(),
            options: Some(options),
            correct_label: Some(correct),
            answer_text: None,
        }
    }

    pub fn saq(
        item_id: impl Into<String>,
        stem: impl Into<String>,
        answer: impl Into<String>,
    ) -> QuizItem {
        QuizItem {
            item_id: item_id.into(),
            kind: QuizKind::Saq,
            stem: stem.into(),
            options: None,
            correct_label: None,
            answer_text: Some(answer.into()),
        }
    }

    pub fn options(&self) -> &[QuizOption] {
        self.options.as_deref().unwrap_or(&[])
    }

    /// The option whose label is `correct_label`, for MCQs.
    pub fn correct_option(&self) -> Option<&QuizOption> {
        let label = self.correct_label?;
        self.options().iter().find(|o| o.label == label)
    }

    /// Text of the correct answer regardless of kind.
    pub fn answer(&self) -> Option<&str> {
        match self.kind {
            QuizKind::Mcq => self.correct_option().map(|o| o.text.as_str()),
            QuizKind::Saq => self.answer_text.as_deref(),
        }
    }

    pub fn distractors(&self) -> impl Iterator<Item = &QuizOption> {
        let correct = self.correct_label;
        self.options()
            .iter()
            .filter(move |o| Some(o.label) != correct)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: String,
    pub endpoint: String,
    pub temperature: f64,
    pub generated_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizSet {
    pub doc_id: String,
    pub format: QuizKind,
    pub items: Vec<QuizItem>,
    pub provenance: Provenance,
}

impl QuizSet {
    pub fn item_count(&self) -> usize {
        self.items.len()
    }
}

/// Five-point human rating. `A` is the best grade and compares greatest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rating {
    A,
    B,
    C,
    D,
    E,
}

impl Rating {
    pub const ALL: [Rating; 5] = [Rating::A, Rating::B, Rating::C, Rating::D, Rating::E];

    fn score(self) -> u8 {
        match self {
            Rating::A => 5,
            Rating::B => 4,
            Rating::C => 3,
            Rating::D => 2,
            Rating::E => 1,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Rating::A => 'A',
            Rating::B => 'B',
            Rating::C => 'C',
            Rating::D => 'D',
            Rating::E => 'E',
        }
    }
}

impl Ord for Rating {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score().cmp(&other.score())
    }
}

impl PartialOrd for Rating {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromStr for Rating {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" | "1" => Ok(Rating::A),
            "B" | "b" | "2" => Ok(Rating::B),
            "C" | "c" | "3" => Ok(Rating::C),
            "D" | "d" | "4" => Ok(Rating::D),
            "E" | "e" | "5" => Ok(Rating::E),
            other => Err(format!(
                "invalid rating `{other}` (expected one of A, B, C, D, E)"
            )),
        }
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub item_id: String,
    pub annotator_id: String,
    pub rating: Rating,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

/// One failed invariant, located by a dotted/indexed field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("validation failed: {}", render_violations(.violations))]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl ValidationError {
    pub fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError {
            violations: vec![Violation {
                path: path.into(),
                message: message.into(),
            }],
        }
    }

    pub fn has_path(&self, path: &str) -> bool {
        self.violations.iter().any(|v| v.path == path)
    }
}

fn render_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Collects violations under a path prefix.
#[derive(Default)]
pub struct Violations {
    items: Vec<Violation>,
}

impl Violations {
    pub fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.items.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    pub fn non_empty(&mut self, path: &str, value: &str) {
        if value.trim().is_empty() {
            self.push(path, "must not be empty");
        }
    }

    pub fn into_result(self) -> Result<(), ValidationError> {
        if self.items.is_empty() {
            Ok(())
        } else {
            Err(ValidationError {
                violations: self.items,
            })
        }
    }
}

pub(crate) fn join(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_string()
    } else {
        format!("{prefix}.{field}")
    }
}

fn nfc(text: &mut String) {
    if !is_nfc(text) {
        *text = text.nfc().collect();
    }
}

/// A domain type with canonical JSON form and checkable invariants.
pub trait Entity: Serialize + DeserializeOwned {
    /// NFC-normalizes every text field in place.
    fn normalize(&mut self);

    fn check(&self, prefix: &str, out: &mut Violations);

    fn validate(&self) -> Result<(), ValidationError> {
        let mut out = Violations::default();
        self.check("", &mut out);
        out.into_result()
    }
}

impl Entity for Subject {
    fn normalize(&mut self) {
        if let Subject::Other(label) = self {
            nfc(label);
        }
    }

    fn check(&self, prefix: &str, out: &mut Violations) {
        if let Subject::Other(label) = self {
            if label.trim().is_empty() {
                out.push(join(prefix, "Other"), "label must not be empty");
            }
        }
    }
}

impl Entity for SourceDocument {
    fn normalize(&mut self) {
        nfc(&mut self.id);
        self.subject.normalize();
        nfc(&mut self.title);
        nfc(&mut self.body);
        if let Some(url) = &mut self.source_url {
            nfc(url);
        }
    }

    fn check(&self, prefix: &str, out: &mut Violations) {
        out.non_empty(&join(prefix, "id"), &self.id);
        self.subject.check(&join(prefix, "subject"), out);
        out.non_empty(&join(prefix, "body"), &self.body);
    }
}

impl Entity for QuizItem {
    fn normalize(&mut self) {
        nfc(&mut self.item_id);
        nfc(&mut self.stem);
        if let Some(options) = &mut self.options {
            for option in options {
                nfc(&mut option.text);
            }
        }
        if let Some(answer) = &mut self.answer_text {
            nfc(answer);
        }
    }

    fn check(&self, prefix: &str, out: &mut Violations) {
        out.non_empty(&join(prefix, "item_id"), &self.item_id);
        out.non_empty(&join(prefix, "stem"), &self.stem);
        let options_path = join(prefix, "options");
        match self.kind {
            QuizKind::Mcq => {
                match &self.options {
                    None => out.push(&options_path, "required for MCQ"),
                    Some(options) => {
                        if !(MIN_OPTIONS..=MAX_OPTIONS).contains(&options.len()) {
                            out.push(
                                &options_path,
                                format!(
                                    "MCQ needs {MIN_OPTIONS}-{MAX_OPTIONS} options, found {}",
                                    options.len()
                                ),
                            );
                        }
                        for (i, option) in options.iter().enumerate() {
                            let path = format!("{options_path}[{i}]");
                            if OptionLabel::from_index(i) != Some(option.label) {
                                out.push(
                                    format!("{path}.label"),
                                    format!(
                                        "labels must run A, B, C... in order; found {} at position {i}",
                                        option.label
                                    ),
                                );
                            }
                            out.non_empty(&format!("{path}.text"), &option.text);
                        }
                        let mut seen = std::collections::HashSet::new();
                        if options.iter().any(|o| !seen.insert(o.text.trim())) {
                            out.push(&options_path, "option texts must be pairwise distinct");
                        }
                    }
                }
                let label_path = join(prefix, "correct_label");
                match self.correct_label {
                    None => out.push(&label_path, "required for MCQ"),
                    Some(label) => {
                        if !self.options().iter().any(|o| o.label == label) {
                            out.push(
                                &label_path,
                                format!("{label} is not among the option labels"),
                            );
                        }
                    }
                }
                if self.answer_text.is_some() {
                    out.push(join(prefix, "answer_text"), "must be absent for MCQ");
                }
            }
            QuizKind::Saq => {
                if self.options.is_some() {
                    out.push(&options_path, "must be absent for SAQ");
                }
                if self.correct_label.is_some() {
                    out.push(join(prefix, "correct_label"), "must be absent for SAQ");
                }
                match &self.answer_text {
                    None => out.push(join(prefix, "answer_text"), "required for SAQ"),
                    Some(answer) => out.non_empty(&join(prefix, "answer_text"), answer),
                }
            }
        }
    }
}

impl Entity for Provenance {
    fn normalize(&mut self) {
        nfc(&mut self.model);
        nfc(&mut self.endpoint);
        for note in &mut self.notes {
            nfc(note);
        }
    }

    fn check(&self, prefix: &str, out: &mut Violations) {
        out.non_empty(&join(prefix, "model"), &self.model);
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            out.push(join(prefix, "temperature"), "must be a finite value >= 0");
        }
    }
}

impl Entity for QuizSet {
    fn normalize(&mut self) {
        nfc(&mut self.doc_id);
        for item in &mut self.items {
            item.normalize();
        }
        self.provenance.normalize();
    }

    fn check(&self, prefix: &str, out: &mut Violations) {
        out.non_empty(&join(prefix, "doc_id"), &self.doc_id);
        let items_path = join(prefix, "items");
        if self.items.is_empty() {
            out.push(&items_path, "must contain at least one item");
        }
        let mut ids = std::collections::HashSet::new();
        for (i, item) in self.items.iter().enumerate() {
            let path = format!("{items_path}[{i}]");
            item.check(&path, out);
            if item.kind != self.format {
                out.push(
                    format!("{path}.kind"),
                    format!(
                        "item kind {} differs from set format {}",
                        item.kind, self.format
                    ),
                );
            }
            if !ids.insert(item.item_id.as_str()) {
                out.push(format!("{path}.item_id"), "duplicate item id within set");
            }
        }
        self.provenance.check(&join(prefix, "provenance"), out);
    }
}

impl Entity for Annotation {
    fn normalize(&mut self) {
        nfc(&mut self.item_id);
        nfc(&mut self.annotator_id);
        if let Some(comment) = &mut self.comment {
            nfc(comment);
        }
    }

    fn check(&self, prefix: &str, out: &mut Violations) {
        out.non_empty(&join(prefix, "item_id"), &self.item_id);
        out.non_empty(&join(prefix, "annotator_id"), &self.annotator_id);
    }
}

/// Canonical JSON text of an entity: compact, fixed key order, NFC text.
pub fn serialize<E: Entity + Clone>(entity: &E) -> String {
    let mut normalized = entity.clone();
    normalized.normalize();
    serde_json::to_string(&normalized).expect("domain entities always serialize")
}

/// Parses and validates an entity, reporting every invariant violation.
pub fn deserialize<E: Entity>(text: &str) -> Result<E, ValidationError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut entity: E = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ValidationError::single(path, err.into_inner().to_string())
    })?;
    entity.normalize();
    entity.validate()?;
    Ok(entity)
}
