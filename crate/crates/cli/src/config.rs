//! TOML run configuration. Every section is optional; command-line flags
//! override file values, and the fully resolved values are what get hashed
//! and echoed into output headers.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// 2000 replications per cell.
    Desk,
    /// 10000 replications per cell.
    Full,
}

impl Profile {
    pub fn reps(self) -> usize {
        match self {
            Profile::Desk => 2000,
            Profile::Full => 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Ni,
    Fractional,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub profile: Option<Profile>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub size: SimSection,
    #[serde(default)]
    pub power: SimSection,
    #[serde(default)]
    pub estimate: EstimateSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub predict: PredictSection,
    #[serde(default)]
    pub memory: MemorySection,
}

/// Shared by `[size]` and `[power]`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub regime: Option<Regime>,
    /// `c` values (near-integrated) or `d` values (fractional).
    pub persistence: Option<Vec<f64>>,
    pub delta: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    pub methods: Option<Vec<String>>,
    pub level: Option<f64>,
    /// Overrides the profile's replication count.
    pub reps: Option<usize>,
    pub beta_max: Option<f64>,
    pub beta_step: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub input: Option<PathBuf>,
    pub y_column: Option<String>,
    pub x_column: Option<String>,
    pub beta0: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: Option<PathBuf>,
    pub date: Option<String>,
    pub index: Option<String>,
    pub predictor: Option<String>,
    pub earnings: Option<String>,
    pub price: Option<String>,
    pub frequency: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictSection {
    pub horizons: Option<Vec<usize>>,
    pub setups: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemorySection {
    pub b: Option<Vec<f64>>,
    pub horizons: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

pub fn check_level(field: &str, level: f64) -> Result<()> {
    if !(level > 0.0 && level < 0.5) {
        bail!("{field}: level must lie in (0, 0.5), got {level}");
    }
    Ok(())
}
