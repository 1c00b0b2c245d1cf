//! Filter thresholds and the pipeline configuration file.
//!
//! The configuration file is TOML. Every threshold has a default, so a
//! minimal file only names the input paths:
//!
//! ```toml
//! corpus = "corpus.tsv"
//! embeddings = "vectors.txt"
//! templates = "templates.tsv"
//! output_dir = "out"
//!
//! [filter]
//! n_rank = 30
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thresholds shared by every stage of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Negatives kept per retained pseudo-query.
    pub n_neg: usize,
    /// A pseudo-query survives only if its own article ranks within this depth.
    pub n_rank: usize,
    /// Nearest candidates kept per template by the interaction filter.
    pub n_sim: usize,
    pub min_headline_tokens: usize,
    pub max_headline_tokens: usize,
    pub k1: f64,
    pub b: f64,
    /// Fixed length of every interaction vector.
    pub query_pad_length: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            n_neg: 6,
            n_rank: 30,
            n_sim: 100,
            min_headline_tokens: 6,
            max_headline_tokens: 16,
            k1: 1.2,
            b: 0.75,
            query_pad_length: 16,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_neg", self.n_neg),
            ("n_rank", self.n_rank),
            ("n_sim", self.n_sim),
            ("min_headline_tokens", self.min_headline_tokens),
            ("max_headline_tokens", self.max_headline_tokens),
            ("query_pad_length", self.query_pad_length),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.n_neg > self.n_rank {
            return Err(Error::Config(format!(
                "n_neg ({}) must not exceed n_rank ({})",
                self.n_neg, self.n_rank
            )));
        }
        if self.min_headline_tokens > self.max_headline_tokens {
            return Err(Error::Config(format!(
                "min_headline_tokens ({}) exceeds max_headline_tokens ({})",
                self.min_headline_tokens, self.max_headline_tokens
            )));
        }
        if self.max_headline_tokens > self.query_pad_length {
            return Err(Error::Config(format!(
                "max_headline_tokens ({}) exceeds query_pad_length ({})",
                self.max_headline_tokens, self.query_pad_length
            )));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Config(format!(
                "b must lie in [0, 1], got {}",
                self.b
            )));
        }
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(Error::Config(format!(
                "k1 must be positive, got {}",
                self.k1
            )));
        }
        Ok(())
    }

    /// Retrieval depth that decides both the positive and the negatives in one call.
    pub fn retrieval_depth(&self) -> usize {
        self.n_rank.max(self.n_neg + 1)
    }
}

/// Batch sampling parameters for the optional `batches.tsv` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            batch_size: 1024,
            iterations: 50,
            seed: 0,
        }
    }
}

/// Everything the `pipeline` subcommand needs. Paths are optional at parse
/// time so the same file can drive a single stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_rerank_depth")]
    pub rerank_depth: usize,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
}

fn default_rerank_depth() -> usize {
    100
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            embeddings: None,
            templates: None,
            output_dir: None,
            rerank_depth: default_rerank_depth(),
            filter: FilterConfig::default(),
            sampling: SamplingConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses TOML text; relative paths are joined onto `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for path in [
            &mut cfg.corpus,
            &mut cfg.embeddings,
            &mut cfg.templates,
            &mut cfg.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if path.is_relative() {
                *path = base_dir.join(&*path);
            }
        }
        cfg.filter.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }

    /// Checks the inputs a full pipeline run needs. The interaction filter
    /// inputs are only required when that stage runs.
    pub fn validate_for_run(&self, with_interaction: bool) -> Result<()> {
        self.filter.validate()?;
        if self.rerank_depth == 0 {
            return Err(Error::Config("rerank_depth must be at least 1".into()));
        }
        let corpus = self
            .corpus
            .as_ref()
            .ok_or_else(|| Error::Config("missing `corpus` path".into()))?;
        require_file("corpus", corpus)?;
        if self.output_dir.is_none() {
            return Err(Error::Config("missing `output_dir` path".into()));
        }
        if with_interaction {
            for (name, path) in [
                ("embeddings", &self.embeddings),
                ("templates", &self.templates),
            ] {
                let path = path.as_ref().ok_or_else(|| {
                    Error::Config(format!(
                        "missing `{name}` path (or pass --skip-interaction-filter)"
                    ))
                })?;
                require_file(name, path)?;
            }
        }
        if self.sampling.batch_size == 0 {
            return Err(Error::Config(
                "sampling.batch_size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn require_file(name: &str, path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "`{name}` path {} does not exist",
            path.display()
        )))
    }
}
