//! Instruct records, document-level train/eval splits, JSONL emission and
//! fine-tuning configuration files.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{subject_distribution, SubjectHistogram};
use crate::generation::format_lettered;
use crate::jsonl::{self, IoError};
use crate::model::{self, join, Entity, QuizKind, QuizSet, SourceDocument, Subject, Violations};
use crate::prompting::{render_instruction, RenderParams};

pub const TRAIN_FILE: &str = "train.jsonl";
pub const EVAL_FILE: &str = "eval.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub doc_id: String,
    pub subject: Subject,
    pub format: QuizKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructRecord {
    pub instruction: String,
    pub input: String,
    pub output: String,
    pub meta: RecordMeta,
}

impl Entity for InstructRecord {
    fn normalize(&mut self) {
        for text in [
            &mut self.instruction,
            &mut self.input,
            &mut self.output,
            &mut self.meta.doc_id,
        ] {
            if !unicode_normalization::is_nfc(text) {
                *text = unicode_normalization::UnicodeNormalization::nfc(text.as_str()).collect();
            }
        }
        self.meta.subject.normalize();
    }

    fn check(&self, prefix: &str, out: &mut Violations) {
        out.non_empty(&join(prefix, "instruction"), &self.instruction);
        out.non_empty(&join(prefix, "input"), &self.input);
        out.non_empty(&join(prefix, "output"), &self.output);
        out.non_empty(&join(prefix, "meta.doc_id"), &self.meta.doc_id);
        self.meta.subject.check(&join(prefix, "meta.subject"), out);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DatasetError {
    #[error("quiz set references unknown document {0}")]
    UnresolvedDoc(String),
    #[error("instruction template: {0}")]
    Template(String),
    #[error("requested {train} train + {eval} eval documents but only {available} are available")]
    InsufficientRecords {
        train: usize,
        eval: usize,
        available: usize,
    },
}

/// One record per quiz set: the instruction rendered for the set's shape,
/// the document body as input, and the items in the lettered layout.
pub fn build_records(
    sets: &[QuizSet],
    corpus: &[SourceDocument],
    instruction_template: &str,
) -> Result<Vec<InstructRecord>, DatasetError> {
    let docs: HashMap<&str, &SourceDocument> = corpus.iter().map(|d| (d.id.as_str(), d)).collect();
    sets.iter()
        .map(|qs| {
            let doc = docs
                .get(qs.doc_id.as_str())
                .ok_or_else(|| DatasetError::UnresolvedDoc(qs.doc_id.clone()))?;
            let params = RenderParams {
                num_questions: qs.items.len() as u32,
                format: qs.format,
                options_per_question: qs
                    .items
                    .iter()
                    .map(|i| i.options().len())
                    .max()
                    .unwrap_or(0)
                    .max(2) as u8,
            };
            let instruction = render_instruction(instruction_template, &doc.title, &params)
                .map_err(DatasetError::Template)?;
            Ok(InstructRecord {
                instruction,
                input: doc.body.clone(),
                output: format_lettered(&qs.items),
                meta: RecordMeta {
                    doc_id: qs.doc_id.clone(),
                    subject: doc.subject.clone(),
                    format: qs.format,
                },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideManifest {
    pub documents: usize,
    pub records: usize,
    pub subjects: SubjectHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub records: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub shuffle: String,
    pub train: SideManifest,
    pub eval: SideManifest,
    /// Documents assigned to neither side.
    pub unused_documents: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<InstructRecord>,
    pub eval: Vec<InstructRecord>,
    pub seed: u64,
    pub manifest: SplitManifest,
}

pub const SHUFFLE_ALGORITHM: &str = "chacha8-fisher-yates-v1";

/// Uniform integer in `0..n` by rejection sampling.
fn below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % n;
        }
    }
}

/// Deterministic permutation of `items`: ChaCha8 seeded through
/// `seed_from_u64`, Fisher–Yates from the last position down.
pub fn seeded_shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..items.len()).rev() {
        let j = below(&mut rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

fn side_manifest(records: &[InstructRecord], documents: usize) -> SideManifest {
    SideManifest {
        documents,
        records: records.len(),
        subjects: subject_distribution(records.iter().map(|r| &r.meta.subject)),
    }
}

/// Assigns whole documents to train and eval. Sizes count distinct
/// documents; with one record per document they equal record counts.
/// Distinct doc ids are sorted, shuffled with [`seeded_shuffle`], and the
/// first `train_n` go to train, the next `eval_n` to eval. Records keep
/// their input order within each side.
pub fn split(
    records: &[InstructRecord],
    train_n: usize,
    eval_n: usize,
    seed: u64,
) -> Result<DatasetSplit, DatasetError> {
    let mut doc_ids: Vec<&str> = records
        .iter()
        .map(|r| r.meta.doc_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if train_n + eval_n > doc_ids.len() {
        return Err(DatasetError::InsufficientRecords {
            train: train_n,
            eval: eval_n,
            available: doc_ids.len(),
        });
    }
    seeded_shuffle(&mut doc_ids, seed);
    #[derive(Clone, Copy, PartialEq)]
    enum Side {
        Train,
        Eval,
    }
    let side: HashMap<&str, Side> = doc_ids
        .iter()
        .take(train_n + eval_n)
        .enumerate()
        .map(|(i, id)| (*id, if i < train_n { Side::Train } else { Side::Eval }))
        .collect();
    let (mut train, mut eval) = (Vec::new(), Vec::new());
    for record in records {
        match side.get(record.meta.doc_id.as_str()) {
            Some(Side::Train) => train.push(record.clone()),
            Some(Side::Eval) => eval.push(record.clone()),
            None => {}
        }
    }
    let manifest = SplitManifest {
        seed,
        shuffle: SHUFFLE_ALGORITHM.into(),
        train: side_manifest(&train, train_n),
        eval: side_manifest(&eval, eval_n),
        unused_documents: doc_ids.len() - train_n - eval_n,
        files: Vec::new(),
    };
    Ok(DatasetSplit {
        train,
        eval,
        seed,
        manifest,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmittedFiles {
    pub train: PathBuf,
    pub eval: PathBuf,
    pub manifest: PathBuf,
    pub manifest_data: SplitManifest,
}

fn sha256_file(path: &Path) -> Result<String, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::new(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes `train.jsonl`, `eval.jsonl` and `manifest.json` (with SHA-256
/// checksums of both data files) into `out_dir`.
pub fn emit_jsonl(
    split: &DatasetSplit,
    out_dir: impl AsRef<Path>,
) -> Result<EmittedFiles, IoError> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| IoError::new(out_dir, e))?;
    let mut manifest = split.manifest.clone();
    manifest.files.clear();
    let mut paths = Vec::new();
    for (name, records) in [(TRAIN_FILE, &split.train), (EVAL_FILE, &split.eval)] {
        let path = out_dir.join(name);
        jsonl::write_entities(&path, records.iter())?;
        manifest.files.push(FileEntry {
            name: name.to_string(),
            records: records.len(),
            sha256: sha256_file(&path)?,
        });
        paths.push(path);
    }
    let manifest_path = out_dir.join(MANIFEST_FILE);
    jsonl::write_json(&manifest_path, &manifest)?;
    let eval = paths.pop().expect("two files");
    let train = paths.pop().expect("two files");
    Ok(EmittedFiles {
        train,
        eval,
        manifest: manifest_path,
        manifest_data: manifest,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    GPT35Turbo,
    Llama2Chat7B,
    Llama2Chat13B,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::GPT35Turbo,
        ModelKind::Llama2Chat7B,
        ModelKind::Llama2Chat13B,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::GPT35Turbo => "GPT3.5 Turbo",
            ModelKind::Llama2Chat7B => "Llama-2-chat 7B",
            ModelKind::Llama2Chat13B => "Llama-2-chat 13B",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::GPT35Turbo => "gpt35-turbo",
            ModelKind::Llama2Chat7B => "llama2-chat-7b",
            ModelKind::Llama2Chat13B => "llama2-chat-13b",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match key.as_str() {
            "gpt35turbo" | "gpt35" => Ok(ModelKind::GPT35Turbo),
            "llama2chat7b" | "llama27b" => Ok(ModelKind::Llama2Chat7B),
            "llama2chat13b" | "llama213b" => Ok(ModelKind::Llama2Chat13B),
            _ => Err(format!(
                "unknown model kind {s:?} (expected gpt35-turbo, llama2-chat-7b or llama2-chat-13b)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FinetuneMethod {
    FullServiceAPI,
    PEFT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinetuneConfig {
    pub model_kind: ModelKind,
    pub method: FinetuneMethod,
    pub batch_size: u32,
    pub learning_rate: f64,
    pub epochs: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peft_r: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peft_alpha: Option<u32>,
}

impl FinetuneConfig {
    pub fn for_model(kind: ModelKind) -> FinetuneConfig {
        match kind {
            ModelKind::GPT35Turbo => FinetuneConfig {
                model_kind: kind,
                method: FinetuneMethod::FullServiceAPI,
                batch_size: 16,
                learning_rate: 0.001,
                epochs: 3,
                peft_r: None,
                peft_alpha: None,
            },
            ModelKind::Llama2Chat7B | ModelKind::Llama2Chat13B => FinetuneConfig {
                model_kind: kind,
                method: FinetuneMethod::PEFT,
                batch_size: 64,
                learning_rate: 0.0001,
                epochs: 3,
                peft_r: Some(16),
                peft_alpha: Some(32),
            },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match (self.method, self.peft_r, self.peft_alpha) {
            (FinetuneMethod::PEFT, Some(r), Some(a)) if r > 0 && a > 0 => {}
            (FinetuneMethod::PEFT, ..) => {
                return Err("PEFT requires positive peft_r and peft_alpha".into())
            }
            (FinetuneMethod::FullServiceAPI, None, None) => {}
            (FinetuneMethod::FullServiceAPI, ..) => {
                return Err("FullServiceAPI does not take peft_r or peft_alpha".into())
            }
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err("batch_size and epochs must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err("learning_rate must be positive".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<FinetuneConfig, String> {
        let cfg: FinetuneConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Writes the configuration for `kind` as TOML.
pub fn emit_finetune_config(
    kind: ModelKind,
    out: impl AsRef<Path>,
) -> Result<FinetuneConfig, IoError> {
    let out = out.as_ref();
    let cfg = FinetuneConfig::for_model(kind);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| IoError::new(parent, e))?;
    }
    std::fs::write(out, cfg.to_toml()).map_err(|e| IoError::new(out, e))?;
    Ok(cfg)
}

/// Reads instruct records, failing on the first invalid line.
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<InstructRecord>, jsonl::ReadError> {
    jsonl::read_entities_strict(path)
}

/// Canonical JSON line of a record.
pub fn record_line(record: &InstructRecord) -> String {
    model::serialize(record)
}
