use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use pointlab::assign::{default_fpn_levels, validate_levels, FpnLevel};
use pointlab::losses::LossWeights;
use pointlab::maskselect::{ClassPrior, MetricParams, DEFAULT_N_THR};
use pointlab::watershed::WatershedConfig;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "POINTLAB_CONFIG";

/// Full run configuration; every field has a default so an empty file (or
/// no file at all) is a valid configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub n_thr: usize,
    pub switch_epoch: usize,
    pub epoch: usize,
    pub class_specific: bool,
    pub seed: u64,
    /// Worker threads for the image pool; 0 picks the machine default.
    pub workers: usize,
    pub watershed: WatershedConfig,
    pub metric_params: MetricParams,
    pub class_priors: Vec<ClassPrior>,
    pub levels: Vec<FpnLevel>,
    pub loss_weights: LossWeights,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_thr: DEFAULT_N_THR,
            switch_epoch: pointlab::assign::DEFAULT_SWITCH_EPOCH,
            epoch: 0,
            class_specific: false,
            seed: 0,
            workers: 0,
            watershed: WatershedConfig::default(),
            metric_params: MetricParams::default(),
            class_priors: Vec::new(),
            levels: default_fpn_levels(),
            loss_weights: LossWeights::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Explicit path, then the environment variable, then defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        if let Some(path) = explicit {
            return Self::load(path);
        }
        if let Ok(env_path) = std::env::var(CONFIG_ENV) {
            if !env_path.is_empty() {
                return Self::load(Path::new(&env_path));
            }
        }
        Ok(Self::default())
    }

    pub fn validate(&self) -> Result<()> {
        self.metric_params.validate()?;
        for prior in &self.class_priors {
            prior.validate()?;
        }
        validate_levels(&self.levels)?;
        Ok(())
    }

    /// Prior for a class, falling back to the all-ones default.
    pub fn prior_for(&self, class_id: u32) -> ClassPrior {
        self.class_priors
            .iter()
            .find(|p| p.class_id == class_id)
            .cloned()
            .unwrap_or(ClassPrior {
                class_id,
                ..ClassPrior::default()
            })
    }
}
