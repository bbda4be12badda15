//! The `--config` file: one TOML document with a section per stage.
//!
//! ```toml
//! [paths]
//! corpus = "data/corpus.jsonl"
//! templates = "templates"
//! outputs = "out"
//!
//! [filter]
//! min_tokens = 100
//! max_tokens = 3000
//!
//! [render]
//! num_questions = 5
//! format = "MCQ"
//! options_per_question = 5
//!
//! [model]
//! endpoint_url = "mock://quiz"
//!
//! [batch]
//! max_concurrency = 4
//!
//! [gate]
//! min_rouge_l = 0.05
//!
//! [split]
//! train = 8000
//! eval = 260
//! seed = 7
//! ```
//!
//! Every section and key is optional. Relative paths are resolved against
//! the directory holding the config file.

use std::path::{Path, PathBuf};

use quizforge_core::corpus::{CleanConfig, FilterConfig};
use quizforge_core::generation::{BatchPolicy, ModelConfig};
use quizforge_core::prompting::RenderParams;
use quizforge_core::rouge::GateConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Cleaned corpus (JSONL of documents).
    pub corpus: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    /// Root for stage outputs when a command's `--out` is omitted.
    pub outputs: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train: Option<usize>,
    pub eval: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub filter: FilterConfig,
    pub clean: CleanConfig,
    pub render: RenderParams,
    pub model: ModelConfig,
    pub batch: BatchPolicy,
    pub gate: GateConfig,
    pub split: SplitSection,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.paths.corpus,
            &mut cfg.paths.templates,
            &mut cfg.paths.outputs,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// `<outputs>/<name>` when an outputs root is configured.
    pub fn output(&self, name: &str) -> Option<PathBuf> {
        self.paths.outputs.as_ref().map(|o| o.join(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_sections_keep_defaults() {
        let cfg: PipelineConfig =
            toml::from_str("[batch]\nmax_retries = 1\n[gate]\nmin_rouge_l = 0.2\n").unwrap();
        assert_eq!(cfg.batch.max_retries, 1);
        assert_eq!(
            cfg.batch.max_concurrency,
            BatchPolicy::default().max_concurrency
        );
        assert_eq!(cfg.gate.min_rouge_l, 0.2);
        assert_eq!(cfg.filter, FilterConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<PipelineConfig>("[gate]\nmin_rogue_l = 0.2\n").is_err());
        assert!(toml::from_str::<PipelineConfig>("[spilt]\nseed = 1\n").is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pipeline.toml");
        std::fs::write(
            &path,
            "[paths]\ncorpus = \"data/c.jsonl\"\noutputs = \"/abs/out\"\n",
        )
        .unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(
            cfg.paths.corpus.as_deref(),
            Some(dir.path().join("data/c.jsonl").as_path())
        );
        assert_eq!(cfg.output("gen").unwrap(), PathBuf::from("/abs/out/gen"));
    }
}
