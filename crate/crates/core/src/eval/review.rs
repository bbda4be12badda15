//! Review samples, the annotation log and rating aggregation.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use chrono::{DateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::dataset::seeded_shuffle;
use crate::jsonl::{self, IoError};
use crate::model::{
    self, Annotation, Entity, QuizItem, QuizSet, Rating, SourceDocument, Subject, ValidationError,
};

/// A quiz item selected for human review, with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<Subject>,
    pub item: QuizItem,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SampleError {
    #[error("asked for {requested} items but only {available} exist")]
    InsufficientItems { requested: usize, available: usize },
}

/// Seeded sample of `n` items without replacement. Uniform over all items,
/// or, with `stratify`, round-robin over subjects (each subject's items in
/// seeded order) so subjects are represented as evenly as their sizes
/// allow. Subjects come from `corpus`; sets whose document is missing
/// form their own stratum.
pub fn sample_for_review(
    sets: &[QuizSet],
    corpus: &[SourceDocument],
    n: usize,
    seed: u64,
    stratify: bool,
) -> Result<Vec<ReviewItem>, SampleError> {
    let subjects: HashMap<&str, &Subject> =
        corpus.iter().map(|d| (d.id.as_str(), &d.subject)).collect();
    let all: Vec<ReviewItem> = sets
        .iter()
        .flat_map(|qs| {
            let subject = subjects.get(qs.doc_id.as_str()).map(|s| (*s).clone());
            qs.items.iter().map(move |item| ReviewItem {
                doc_id: qs.doc_id.clone(),
                subject: subject.clone(),
                item: item.clone(),
            })
        })
        .collect();
    if n > all.len() {
        return Err(SampleError::InsufficientItems {
            requested: n,
            available: all.len(),
        });
    }
    let mut picked: Vec<usize> = if stratify {
        let mut strata: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, item) in all.iter().enumerate() {
            let key = item
                .subject
                .as_ref()
                .map_or_else(String::new, Subject::slug);
            strata.entry(key).or_default().push(i);
        }
        let mut queues: Vec<std::vec::IntoIter<usize>> = strata
            .into_values()
            .enumerate()
            .map(|(k, mut idx)| {
                seeded_shuffle(&mut idx, seed.wrapping_add(k as u64));
                idx.into_iter()
            })
            .collect();
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            for q in queues.iter_mut() {
                if out.len() == n {
                    break;
                }
                if let Some(i) = q.next() {
                    out.push(i);
                }
            }
        }
        out
    } else {
        let mut idx: Vec<usize> = (0..all.len()).collect();
        seeded_shuffle(&mut idx, seed);
        idx.truncate(n);
        idx
    };
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| all[i].clone()).collect())
}

/// Regroups sampled items into quiz sets (one per document, first-seen
/// order) so a sample can be served like any quiz file.
pub fn sample_to_sets(sample: &[ReviewItem], sets: &[QuizSet]) -> Vec<QuizSet> {
    let mut out: Vec<QuizSet> = Vec::new();
    for r in sample {
        if let Some(qs) = out.iter_mut().find(|qs| qs.doc_id == r.doc_id) {
            qs.items.push(r.item.clone());
            continue;
        }
        let Some(source) = sets.iter().find(|qs| qs.doc_id == r.doc_id) else {
            continue;
        };
        out.push(QuizSet {
            items: vec![r.item.clone()],
            ..source.clone()
        });
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

type Key = (String, String);

/// Whether `a` supersedes `b` for the same (item, annotator). Later
/// timestamps win; exact ties fall back to a fixed order on the content so
/// the result never depends on log order.
fn supersedes(a: &Annotation, b: &Annotation) -> bool {
    (a.timestamp, a.rating.letter(), a.comment.as_deref())
        > (b.timestamp, b.rating.letter(), b.comment.as_deref())
}

/// Append-only annotation log with a latest-wins view per
/// (item, annotator).
#[derive(Debug)]
pub struct AnnotationStore {
    path: Option<PathBuf>,
    log: Vec<Annotation>,
    effective: BTreeMap<Key, Annotation>,
}

impl AnnotationStore {
    /// Store without a backing file.
    pub fn in_memory() -> AnnotationStore {
        AnnotationStore {
            path: None,
            log: Vec::new(),
            effective: BTreeMap::new(),
        }
    }

    pub fn from_annotations(annotations: impl IntoIterator<Item = Annotation>) -> AnnotationStore {
        let mut store = AnnotationStore::in_memory();
        for a in annotations {
            store.absorb(a);
        }
        store
    }

    /// Opens or creates the log at `path`. A torn final line (an
    /// interrupted write) is cut off; any other bad line is an error.
    pub fn open(path: impl AsRef<Path>) -> Result<AnnotationStore, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut store = AnnotationStore::in_memory();
        if jsonl::repair_tail(&path, |l| model::deserialize::<Annotation>(l).is_ok())? {
            tracing::warn!(path = %path.display(), "dropped a torn final line");
        }
        if path.exists() {
            for (line, text) in jsonl::read_lines(&path)? {
                let a =
                    model::deserialize::<Annotation>(&text).map_err(|e| StoreError::Corrupt {
                        path: path.clone(),
                        line,
                        message: e.to_string(),
                    })?;
                store.absorb(a);
            }
        }
        store.path = Some(path);
        Ok(store)
    }

    fn absorb(&mut self, a: Annotation) {
        let key = (a.item_id.clone(), a.annotator_id.clone());
        match self.effective.get(&key) {
            Some(current) if !supersedes(&a, current) => {}
            _ => {
                self.effective.insert(key, a.clone());
            }
        }
        self.log.push(a);
    }

    /// Validates, durably appends, then applies `a`. If the timestamp does
    /// not come after the current rating for the same key it is moved to
    /// one microsecond later, so a re-rating always takes effect.
    pub fn append(&mut self, mut a: Annotation) -> Result<Annotation, StoreError> {
        a.normalize();
        a.validate()?;
        if let Some(current) = self
            .effective
            .get(&(a.item_id.clone(), a.annotator_id.clone()))
        {
            if a.timestamp <= current.timestamp {
                a.timestamp = current.timestamp + TimeDelta::microseconds(1);
            }
        }
        if let Some(path) = &self.path {
            jsonl::append_line_durable(path, &model::serialize(&a))?;
        }
        self.absorb(a.clone());
        Ok(a)
    }

    /// Convenience for a rating made now.
    pub fn rate(
        &mut self,
        item_id: &str,
        annotator_id: &str,
        rating: Rating,
        comment: Option<String>,
        now: DateTime<Utc>,
    ) -> Result<Annotation, StoreError> {
        self.append(Annotation {
            item_id: item_id.to_string(),
            annotator_id: annotator_id.to_string(),
            rating,
            timestamp: now,
            comment,
        })
    }

    pub fn log(&self) -> &[Annotation] {
        &self.log
    }

    /// Latest annotation per (item, annotator), ordered by key.
    pub fn effective(&self) -> impl Iterator<Item = &Annotation> {
        self.effective.values()
    }

    pub fn effective_count(&self) -> usize {
        self.effective.len()
    }

    pub fn has_rated(&self, item_id: &str, annotator_id: &str) -> bool {
        self.effective
            .contains_key(&(item_id.to_string(), annotator_id.to_string()))
    }

    pub fn rated_by(&self, annotator_id: &str) -> usize {
        self.effective
            .keys()
            .filter(|(_, a)| a == annotator_id)
            .count()
    }

    pub fn annotators(&self) -> Vec<String> {
        let mut out: Vec<String> = self.effective.keys().map(|(_, a)| a.clone()).collect();
        out.sort();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingShare {
    pub rating: Rating,
    pub count: usize,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingDistribution {
    pub total: usize,
    /// Always all five ratings, A first.
    pub ratings: Vec<RatingShare>,
}

impl RatingDistribution {
    pub fn from_ratings<'a>(ratings: impl IntoIterator<Item = &'a Rating>) -> RatingDistribution {
        let mut counts = [0usize; 5];
        for r in ratings {
            counts[Rating::ALL
                .iter()
                .position(|x| x == r)
                .expect("known rating")] += 1;
        }
        let total: usize = counts.iter().sum();
        RatingDistribution {
            total,
            ratings: Rating::ALL
                .iter()
                .zip(counts)
                .map(|(&rating, count)| RatingShare {
                    rating,
                    count,
                    percentage: if total == 0 {
                        0.0
                    } else {
                        100.0 * count as f64 / total as f64
                    },
                })
                .collect(),
        }
    }

    pub fn share(&self, rating: Rating) -> &RatingShare {
        self.ratings
            .iter()
            .find(|s| s.rating == rating)
            .expect("all ratings present")
    }

    /// `A: 28 (93.3%)` lines, one per rating.
    pub fn render(&self) -> String {
        let mut out = format!("ratings: {}\n", self.total);
        for s in &self.ratings {
            out.push_str(&format!(
                "{}: {} ({:.1}%)\n",
                s.rating.letter(),
                s.count,
                s.percentage
            ));
        }
        out
    }
}

/// Distribution over the effective (latest) rating of every
/// (item, annotator) pair.
pub fn aggregate_ratings(store: &AnnotationStore) -> RatingDistribution {
    RatingDistribution::from_ratings(store.effective().map(|a| &a.rating))
}

/// One distribution per annotator, by annotator id.
pub fn aggregate_by_annotator(store: &AnnotationStore) -> BTreeMap<String, RatingDistribution> {
    store
        .annotators()
        .into_iter()
        .map(|id| {
            let dist = RatingDistribution::from_ratings(
                store
                    .effective()
                    .filter(|a| a.annotator_id == id)
                    .map(|a| &a.rating),
            );
            (id, dist)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{OptionLabel, Provenance, QuizKind};

    fn ts(secs: i64) -> DateTime<Utc> {
        DateTime::from_timestamp(1_700_000_000 + secs, 0).unwrap()
    }

    fn ann(item: &str, who: &str, rating: Rating, t: i64) -> Annotation {
        Annotation {
            item_id: item.into(),
            annotator_id: who.into(),
            rating,
            timestamp: ts(t),
            comment: None,
        }
    }

    #[test]
    fn twenty_eight_of_thirty() {
        let anns = (0..30).map(|i| {
            ann(
                &format!("d#{i}"),
                "a1",
                if i < 28 { Rating::A } else { Rating::C },
                i,
            )
        });
        let dist = aggregate_ratings(&AnnotationStore::from_annotations(anns));
        assert_eq!(dist.total, 30);
        assert_eq!(format!("{:.1}", dist.share(Rating::A).percentage), "93.3");
        assert!(dist.render().contains("A: 28 (93.3%)"));
    }

    #[test]
    fn empty_store() {
        let dist = aggregate_ratings(&AnnotationStore::in_memory());
        assert_eq!(dist.total, 0);
        assert!(dist
            .ratings
            .iter()
            .all(|s| s.count == 0 && s.percentage == 0.0));
        assert_eq!(dist.ratings.len(), 5);
    }

    #[test]
    fn latest_rating_wins() {
        let store = AnnotationStore::from_annotations([
            ann("x", "a1", Rating::B, 1),
            ann("x", "a1", Rating::A, 2),
        ]);
        let dist = aggregate_ratings(&store);
        assert_eq!(dist.total, 1);
        assert_eq!(dist.share(Rating::A).count, 1);
        assert_eq!(store.log().len(), 2);
    }

    #[test]
    fn persisted_log_reopens() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ann.jsonl");
        let mut store = AnnotationStore::open(&path).unwrap();
        store.rate("x", "a1", Rating::B, None, ts(5)).unwrap();
        // Same timestamp: still takes effect.
        let second = store.rate("x", "a1", Rating::A, None, ts(5)).unwrap();
        assert!(second.timestamp > ts(5));
        drop(store);
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{\"item_id\":\"y\",\"annot");
        std::fs::write(&path, text).unwrap();
        let mut store = AnnotationStore::open(&path).unwrap();
        assert_eq!(store.log().len(), 2);
        assert_eq!(aggregate_ratings(&store).share(Rating::A).count, 1);
        store.rate("y", "a1", Rating::C, None, ts(9)).unwrap();
        let reopened = AnnotationStore::open(&path).unwrap();
        assert_eq!(reopened.effective_count(), 2);
    }

    #[test]
    fn invalid_annotation_is_not_written() {
        let mut store = AnnotationStore::in_memory();
        assert!(store.rate("", "a1", Rating::A, None, ts(0)).is_err());
        assert!(store.log().is_empty());
    }

    fn sets_and_corpus() -> (Vec<QuizSet>, Vec<SourceDocument>) {
        let prov = Provenance {
            model: "m".into(),
            endpoint: "e".into(),
            temperature: 0.0,
            generated_at: ts(0),
            notes: vec![],
        };
        let mut sets = Vec::new();
        let mut corpus = Vec::new();
        for (d, subject) in [
            ("h1", Subject::History),
            ("h2", Subject::History),
            ("b1", Subject::Biology),
        ] {
            sets.push(QuizSet {
                doc_id: d.into(),
                format: QuizKind::Mcq,
                items: (0..3)
                    .map(|i| {
                        QuizItem::mcq(
                            model::item_id(d, i),
                            "S?",
                            vec!["x".into(), "y".into()],
                            OptionLabel::A,
                        )
                    })
                    .collect(),
                provenance: prov.clone(),
            });
            corpus.push(SourceDocument {
                id: d.into(),
                subject,
                title: "t".into(),
                body: "b".into(),
                source_url: None,
                token_count: 1,
            });
        }
        (sets, corpus)
    }

    #[test]
    fn sampling_rules() {
        let (sets, corpus) = sets_and_corpus();
        let all = sample_for_review(&sets, &corpus, 9, 1, false).unwrap();
        assert_eq!(all.len(), 9);
        assert_eq!(
            sample_for_review(&sets, &corpus, 5, 3, false),
            sample_for_review(&sets, &corpus, 5, 3, false)
        );
        assert!(matches!(
            sample_for_review(&sets, &corpus, 10, 1, false),
            Err(SampleError::InsufficientItems {
                requested: 10,
                available: 9
            })
        ));
        let strat = sample_for_review(&sets, &corpus, 4, 7, true).unwrap();
        let bio = strat
            .iter()
            .filter(|r| r.subject == Some(Subject::Biology))
            .count();
        assert_eq!(bio, 2);
        let regrouped = sample_to_sets(&strat, &sets);
        assert_eq!(regrouped.iter().map(|s| s.items.len()).sum::<usize>(), 4);
    }
}
