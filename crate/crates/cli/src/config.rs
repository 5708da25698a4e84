use std::path::Path;

use anyhow::{bail, Context, Result};
use qxg_core::calculi::CalculiConfig;
use qxg_core::explainer::{Hyperparams, DEFAULT_T};
use serde::{Deserialize, Serialize};

/// Settings shared by all commands. Loaded from JSON; command-line flags
/// override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub calculi: CalculiConfig,
    pub t: usize,
    pub hyperparams: Hyperparams,
    pub seed: u64,
    pub threshold: f64,
    pub top_k: usize,
    /// Skip pairs whose centres are farther apart than this (metres).
    pub distance_cutoff: Option<f64>,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            calculi: CalculiConfig::default(),
            t: DEFAULT_T,
            hyperparams: Hyperparams::default(),
            seed: 0,
            threshold: 0.5,
            top_k: 5,
            distance_cutoff: None,
        }
    }
}

impl AppConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            bail!("t must be at least 1");
        }
        let hp = &self.hyperparams;
        if hp.n_trees == 0 || hp.max_depth == 0 || hp.min_samples_leaf == 0 {
            bail!("n_trees, max_depth and min_samples_leaf must be positive");
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            bail!("threshold must be finite and non-negative");
        }
        if let Some(c) = self.distance_cutoff {
            if !(c.is_finite() && c > 0.0) {
                bail!("distance_cutoff must be positive");
            }
        }
        Ok(())
    }
}
