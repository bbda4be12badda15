use std::collections::HashSet;

use chrono::{DateTime, TimeZone, Utc};
use proptest::prelude::*;
use quizforge_core::dataset::{self, InstructRecord, RecordMeta};
use quizforge_core::eval::{aggregate_ratings, AnnotationStore};
use quizforge_core::model::{
    self, Annotation, OptionLabel, Provenance, QuizItem, QuizKind, QuizSet, Rating, Subject,
};
use quizforge_core::rouge::{rouge_l, rouge_n, rouge_report, score_texts};

const WORDS: [&str; 12] = [
    "kedi",
    "İstanbul",
    "ırmak",
    "öğrenci",
    "şehir",
    "ağaç",
    "Çanakkale",
    "gül",
    "dağ",
    "ISPARTA",
    "kitap",
    "deniz",
];

fn phrase(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(&WORDS[..]), 1..=max).prop_map(|w| w.join(" "))
}

/// Stem, distinct option texts, correct index, SAQ answer.
fn item() -> impl Strategy<Value = (String, Vec<String>, u8, String)> {
    (
        phrase(6),
        prop::collection::hash_set(phrase(3), 2..=5),
        0u8..5,
        phrase(3),
    )
        .prop_map(|(stem, opts, correct, answer)| {
            let opts: Vec<String> = opts.into_iter().collect();
            let correct = correct % opts.len() as u8;
            (stem, opts, correct, answer)
        })
}

fn quiz_set() -> impl Strategy<Value = QuizSet> {
    (
        prop::bool::ANY,
        prop::collection::vec(item(), 1..6),
        0i64..2_000_000_000,
        0.0f64..2.0,
    )
        .prop_map(|(mcq, raw, secs, temperature)| {
            let doc_id = "doc-1".to_string();
            let kind = if mcq { QuizKind::Mcq } else { QuizKind::Saq };
            let items = raw
                .into_iter()
                .enumerate()
                .map(|(i, (stem, opts, correct, answer))| match kind {
                    QuizKind::Mcq => QuizItem::mcq(
                        model::item_id(&doc_id, i),
                        stem,
                        opts,
                        OptionLabel::from_index(correct as usize).unwrap(),
                    ),
                    QuizKind::Saq => QuizItem::saq(model::item_id(&doc_id, i), stem, answer),
                })
                .collect();
            QuizSet {
                doc_id,
                format: kind,
                items,
                provenance: Provenance {
                    model: "gpt-4-turbo".into(),
                    endpoint: "mock://quiz".into(),
                    temperature,
                    generated_at: Utc.timestamp_opt(secs, 0).unwrap(),
                    notes: vec![],
                },
            }
        })
}

fn tokens() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..6, 0..=12)
}

proptest! {
    #[test]
    fn quiz_sets_survive_serialization(qs in quiz_set()) {
        let text = model::serialize(&qs);
        let back: QuizSet = model::deserialize(&text).unwrap();
        prop_assert_eq!(&back, &qs);
        prop_assert_eq!(model::serialize(&back), text);
    }

    #[test]
    fn swapping_sides_swaps_precision_and_recall(a in tokens(), b in tokens()) {
        for (x, y) in [(rouge_n(&a, &b, 1), rouge_n(&b, &a, 1)), (rouge_n(&a, &b, 2), rouge_n(&b, &a, 2)), (rouge_l(&a, &b), rouge_l(&b, &a))] {
            prop_assert_eq!(x.precision, y.recall);
            prop_assert_eq!(x.recall, y.precision);
            prop_assert!((x.f1 - y.f1).abs() < 1e-15);
        }
    }

    #[test]
    fn scores_stay_in_unit_range(a in tokens(), b in tokens()) {
        let r = rouge_report(&a, &b);
        for s in [r.rouge1, r.rouge2, r.rouge_l] {
            for v in [s.precision, s.recall, s.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert_eq!(s.f1 == 0.0, s.precision == 0.0 && s.recall == 0.0);
        }
    }

    #[test]
    fn split_sides_are_disjoint_and_sized(docs in 1usize..40, per_doc in 1usize..3, seed in any::<u64>(), train_frac in 0.0f64..1.0) {
        let records: Vec<InstructRecord> = (0..docs)
            .flat_map(|d| (0..per_doc).map(move |k| record(d, k)))
            .collect();
        let train = ((docs as f64) * train_frac) as usize;
        let eval = docs - train;
        let split = dataset::split(&records, train, eval, seed).unwrap();
        let train_docs: HashSet<_> = split.train.iter().map(|r| r.meta.doc_id.clone()).collect();
        let eval_docs: HashSet<_> = split.eval.iter().map(|r| r.meta.doc_id.clone()).collect();
        prop_assert_eq!(train_docs.len(), train);
        prop_assert_eq!(eval_docs.len(), eval);
        prop_assert!(train_docs.is_disjoint(&eval_docs));
        prop_assert_eq!(split.train.len() + split.eval.len(), records.len());
        prop_assert_eq!(dataset::split(&records, train, eval, seed).unwrap().train, split.train);
    }

    #[test]
    fn rating_aggregate_ignores_log_order(ratings in prop::collection::vec((0usize..6, 0usize..3, 0usize..5, 0i64..50), 0..40), seed in any::<u64>()) {
        let log: Vec<Annotation> = ratings
            .iter()
            .map(|&(item, annotator, r, t)| Annotation {
                item_id: format!("d#{item}"),
                annotator_id: format!("ann{annotator}"),
                rating: Rating::ALL[r],
                timestamp: ts(t),
                comment: None,
            })
            .collect();
        let mut shuffled = log.clone();
        dataset::seeded_shuffle(&mut shuffled, seed);
        let a = aggregate_ratings(&AnnotationStore::from_annotations(log));
        let b = aggregate_ratings(&AnnotationStore::from_annotations(shuffled));
        prop_assert_eq!(a, b);
    }
}

fn ts(secs: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(1_700_000_000 + secs, 0).unwrap()
}

fn record(doc: usize, k: usize) -> InstructRecord {
    InstructRecord {
        instruction: "Soru hazırla.".into(),
        input: format!("Metin {doc}"),
        output: format!("1. Soru {k}?\nCevap: {doc}"),
        meta: RecordMeta {
            doc_id: format!("doc-{doc:03}"),
            subject: Subject::History,
            format: QuizKind::Saq,
        },
    }
}

#[derive(serde::Deserialize)]
struct Expected {
    precision: f64,
    recall: f64,
    f1: f64,
}

#[derive(serde::Deserialize)]
struct ReferenceRow {
    candidate: String,
    reference: String,
    rouge1: Expected,
    rouge2: Expected,
    #[serde(rename = "rougeL")]
    rouge_l: Expected,
}

/// Values produced by `tests/fixtures/rouge_reference.py` with the
/// `rouge-score` Python package.
#[test]
fn agrees_with_reference_rouge_package() {
    let rows: Vec<ReferenceRow> =
        serde_json::from_str(include_str!("fixtures/rouge_reference.json"))
            .expect("fixture parses");
    assert!(rows.len() >= 10);
    for row in rows {
        let got = score_texts(&row.candidate, &row.reference);
        for (name, g, e) in [
            ("rouge1", got.rouge1, &row.rouge1),
            ("rouge2", got.rouge2, &row.rouge2),
            ("rougeL", got.rouge_l, &row.rouge_l),
        ] {
            for (what, a, b) in [
                ("precision", g.precision, e.precision),
                ("recall", g.recall, e.recall),
                ("f1", g.f1, e.f1),
            ] {
                assert!(
                    (a - b).abs() < 1e-6,
                    "{name} {what} for {:?} vs {:?}: got {a}, expected {b}",
                    row.candidate,
                    row.reference
                );
            }
        }
    }
}
