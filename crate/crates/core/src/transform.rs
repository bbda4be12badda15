//! Deriving short-answer quiz sets from multiple-choice ones.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::jsonl::{self, IoError, LineError};
use crate::model::{self, QuizItem, QuizKind, QuizSet};

/// Provenance note added to every converted set.
pub const TRANSFORM_NOTE: &str = "transform: mcq-to-saq";

/// Stems containing this phrase presuppose a list of options.
pub const OPTION_DEPENDENT_PHRASE: &str = "aşağıdakilerden hangisi";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Keeps each stem verbatim and replaces the options with the text of the
/// correct one.
pub fn mcq_to_saq(qs: &QuizSet) -> Result<QuizSet, TransformError> {
    if qs.format != QuizKind::Mcq {
        return Err(TransformError::InvalidInput(format!(
            "{}: expected an MCQ set, found {}",
            qs.doc_id, qs.format
        )));
    }
    let items = qs
        .items
        .iter()
        .map(|item| {
            if item.kind != QuizKind::Mcq {
                return Err(TransformError::InvalidInput(format!(
                    "{}: not an MCQ item",
                    item.item_id
                )));
            }
            let answer = item.correct_option().ok_or_else(|| {
                TransformError::InvalidInput(format!("{}: no correct option", item.item_id))
            })?;
            Ok(QuizItem::saq(
                item.item_id.clone(),
                item.stem.clone(),
                answer.text.clone(),
            ))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut provenance = qs.provenance.clone();
    if !provenance.notes.iter().any(|n| n == TRANSFORM_NOTE) {
        provenance.notes.push(TRANSFORM_NOTE.to_string());
    }
    Ok(QuizSet {
        doc_id: qs.doc_id.clone(),
        format: QuizKind::Saq,
        items,
        provenance,
    })
}

/// Ids of items whose stem refers to options that a short-answer version
/// no longer has.
pub fn option_dependent_items(qs: &QuizSet) -> Vec<String> {
    qs.items
        .iter()
        .filter(|item| {
            crate::rouge::normalize_tr(&item.stem)
                .join(" ")
                .contains(OPTION_DEPENDENT_PHRASE)
        })
        .map(|item| item.item_id.clone())
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransformSummary {
    pub sets_in: usize,
    pub sets_out: usize,
    pub items_transformed: usize,
    pub errors: Vec<LineError>,
    /// Items flagged for review because their stem presupposes options.
    pub option_dependent_items: Vec<String>,
}

/// Converts JSONL lines of MCQ sets. Bad records are reported by line
/// number and skipped.
pub fn transform_lines(
    lines: impl IntoIterator<Item = (usize, String)>,
) -> (Vec<QuizSet>, TransformSummary) {
    let mut out = Vec::new();
    let mut summary = TransformSummary::default();
    for (line, text) in lines {
        summary.sets_in += 1;
        let converted = model::deserialize::<QuizSet>(&text)
            .map_err(|e| e.to_string())
            .and_then(|qs| {
                mcq_to_saq(&qs)
                    .map(|saq| (qs, saq))
                    .map_err(|e| e.to_string())
            });
        match converted {
            Ok((mcq, saq)) => {
                summary
                    .option_dependent_items
                    .extend(option_dependent_items(&mcq));
                summary.items_transformed += saq.items.len();
                out.push(saq);
            }
            Err(message) => summary.errors.push(LineError { line, message }),
        }
    }
    summary.sets_out = out.len();
    (out, summary)
}

/// File-to-file form of [`transform_lines`]. The output file is always
/// written, empty when nothing converted.
pub fn transform_corpus(
    input: impl AsRef<Path>,
    output: impl AsRef<Path>,
) -> Result<TransformSummary, IoError> {
    let (sets, summary) = transform_lines(jsonl::read_lines(input)?);
    jsonl::write_entities(output, &sets)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Entity, OptionLabel, Provenance};

    fn prov() -> Provenance {
        Provenance {
            model: "m".into(),
            endpoint: "mock://quiz".into(),
            temperature: 0.7,
            generated_at: "2024-01-01T00:00:00Z".parse().unwrap(),
            notes: vec![],
        }
    }

    fn set(items: Vec<QuizItem>) -> QuizSet {
        QuizSet {
            doc_id: "doc".into(),
            format: QuizKind::Mcq,
            items,
            provenance: prov(),
        }
    }

    #[test]
    fn takes_the_correct_option_text() {
        let qs = set(vec![QuizItem::mcq(
            "doc#0",
            "S",
            vec!["x".into(), "y".into()],
            OptionLabel::B,
        )]);
        let saq = mcq_to_saq(&qs).unwrap();
        assert_eq!(saq.items, vec![QuizItem::saq("doc#0", "S", "y")]);
        assert_eq!(saq.format, QuizKind::Saq);
        assert_eq!(saq.provenance.notes, vec![TRANSFORM_NOTE.to_string()]);
        saq.validate().unwrap();
    }

    #[test]
    fn rejects_short_answer_input() {
        let qs = set(vec![QuizItem::mcq(
            "doc#0",
            "S",
            vec!["x".into(), "y".into()],
            OptionLabel::A,
        )]);
        let saq = mcq_to_saq(&qs).unwrap();
        assert!(matches!(
            mcq_to_saq(&saq),
            Err(TransformError::InvalidInput(_))
        ));
    }

    #[test]
    fn rejects_missing_correct_label() {
        let mut item = QuizItem::mcq("doc#0", "S", vec!["x".into(), "y".into()], OptionLabel::A);
        item.correct_label = None;
        assert!(mcq_to_saq(&set(vec![item])).is_err());
    }

    #[test]
    fn flags_option_dependent_stems() {
        let qs = set(vec![
            QuizItem::mcq(
                "doc#0",
                "AŞAĞIDAKİLERDEN HANGİSİ doğrudur?",
                vec!["x".into(), "y".into()],
                OptionLabel::A,
            ),
            QuizItem::mcq(
                "doc#1",
                "Başkent neresidir?",
                vec!["x".into(), "y".into()],
                OptionLabel::A,
            ),
        ]);
        assert_eq!(option_dependent_items(&qs), vec!["doc#0".to_string()]);
    }

    #[test]
    fn corrupt_lines_are_reported_and_skipped() {
        let good = model::serialize(&set(vec![QuizItem::mcq(
            "doc#0",
            "S",
            vec!["x".into(), "y".into()],
            OptionLabel::A,
        )]));
        let lines = vec![(1, good.clone()), (2, "{not json".to_string()), (3, good)];
        let (out, summary) = transform_lines(lines);
        assert_eq!(out.len(), 2);
        assert_eq!(summary.sets_in, 3);
        assert_eq!(summary.sets_out, 2);
        assert_eq!(summary.items_transformed, 2);
        assert_eq!(summary.errors.len(), 1);
        assert_eq!(summary.errors[0].line, 2);
    }

    #[test]
    fn empty_input() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.jsonl");
        std::fs::write(&input, "").unwrap();
        let out = dir.path().join("out.jsonl");
        let summary = transform_corpus(&input, &out).unwrap();
        assert_eq!(summary, TransformSummary::default());
        assert_eq!(std::fs::read_to_string(out).unwrap(), "");
    }
}
