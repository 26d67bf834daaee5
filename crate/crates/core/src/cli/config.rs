//! Run configurations. Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::experiments::{FidelitySpec, SweepSpec};
use crate::replica::InitForm;

/// A configuration problem: unreadable file, bad syntax, a missing or unknown
/// key, or a value that fails validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn parse<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message();
        let location = e
            .span()
            .map(|s| {
                let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
                format!(" (line {line})")
            })
            .unwrap_or_default();
        ConfigError(format!("invalid config {origin}{location}: {msg}"))
    })
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

pub type SweepConfig = SweepSpec;
pub type XebConfig = FidelitySpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanFieldConfig {
    pub j: f64,
    pub p: f64,
    pub gamma_a: f64,
    /// `|Δ_1|` values for fixed points, stability and trajectories.
    pub delta1: Vec<f64>,
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitFormConfig {
    Haar,
    Product,
}

impl From<InitFormConfig> for InitForm {
    fn from(f: InitFormConfig) -> Self {
        match f {
            InitFormConfig::Haar => InitForm::HaarOnRegion,
            InitFormConfig::Product => InitForm::ProductOnRegion,
        }
    }
}

fn default_form() -> InitFormConfig {
    InitFormConfig::Product
}

fn default_draws() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstabilityConfig {
    pub sizes: Vec<usize>,
    pub p: f64,
    pub q1: f64,
    pub q2: f64,
    pub d_max: usize,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_form")]
    pub form: InitFormConfig,
    #[serde(default)]
    pub seed: u64,
}

/// Inclusive evenly spaced grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseConfig {
    /// A sweep table written by `sweep`; mutually exclusive with `sweep`.
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// Run this sweep first.
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub sigma_c: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub sigma_grid: Option<GridConfig>,
    #[serde(default)]
    pub mu_grid: Option<GridConfig>,
    #[serde(default)]
    pub y_exponent: Option<f64>,
}
