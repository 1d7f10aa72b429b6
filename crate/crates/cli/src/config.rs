use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use crowdprop::{SpanPolicy, SrsRelationWeighting, VectorFormat};
use serde::Deserialize;

/// Optional TOML file supplying defaults for any flag. Flags win.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub annotations: Option<PathBuf>,
    pub inventory: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub embeddings_format: Option<VectorFormat>,
    pub crowd: Option<PathBuf>,
    pub ds: Option<PathBuf>,
    pub quality: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub span_policy: Option<SpanPolicy>,
    pub gold_threshold: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub threads: Option<usize>,
    pub batch_size: Option<usize>,
    pub srs_relation_weighting: Option<SrsRelationWeighting>,
    pub clamp_similarity: Option<bool>,
    pub report_unweighted: Option<bool>,
}

/// Marks a failure in the content of a config file or flags rather than in
/// I/O.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|source| crowdprop::Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))
            .context("reading config file")
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.gold_threshold {
            if !(t > 0.0 && t < 1.0) {
                bail!(ConfigError(format!("gold threshold must lie in (0, 1), got {t}")));
            }
        }
        if self.threads == Some(0) {
            bail!(ConfigError("thread count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Flag value, else config value, else an error naming both.
pub fn required<T: Clone>(flag: &Option<T>, file: &Option<T>, name: &str) -> Result<T> {
    match flag.as_ref().or(file.as_ref()) {
        Some(v) => Ok(v.clone()),
        None => bail!(ConfigError(format!(
            "missing --{} (or `{}` in the config file)",
            name.replace('_', "-"),
            name
        ))),
    }
}

pub fn optional<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.as_ref().or(file.as_ref()).cloned()
}

/// Word-vector format from the flag or config, else from the extension.
pub fn vector_format(flag: Option<VectorFormat>, file: Option<VectorFormat>, path: &Path) -> VectorFormat {
    flag.or(file).unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => VectorFormat::Binary,
        _ => VectorFormat::Text,
    })
}
