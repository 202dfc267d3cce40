//! TOML run configuration.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::UpdateRegistry;
use crate::explore::{ExploreError, RunConfig};
use crate::gp::{KernelRegistry, KernelSpec, RkhsBound};
use crate::plant::{InputSet, NoiseSpec, PlantRegistry};
use crate::synthesis::PredecessorRegistry;
use crate::tsys::{HalfSpace, SafeSet};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    Schema(u32),
    #[error("{0}")]
    Invalid(String),
}

impl From<ExploreError> for ConfigError {
    fn from(e: ExploreError) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafeSetSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default)]
    pub exclusions: Vec<HalfSpace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub eta: f64,
}

/// One kernel family; `alpha` has one entry per state dimension and the
/// length scales are shared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(default = "default_kernel")]
    pub name: String,
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
}

fn default_kernel() -> String {
    "se".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbstractionSection {
    pub eta_x: f64,
    /// Defaults to `eta_x`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default = "default_update")]
    pub update: String,
    #[serde(default = "default_rho")]
    pub rho: f64,
}

fn default_update() -> String {
    "lazy".into()
}

fn default_rho() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSection {
    #[serde(default = "default_predecessor")]
    pub predecessor: String,
}

impl Default for SynthesisSection {
    fn default() -> Self {
        SynthesisSection { predecessor: default_predecessor() }
    }
}

fn default_predecessor() -> String {
    "incremental".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationSection {
    pub t_exp: usize,
    #[serde(default = "default_max_batches")]
    pub max_batches: usize,
    #[serde(default = "default_true")]
    pub timings: bool,
}

fn default_max_batches() -> usize {
    50
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub system: String,
    #[serde(default)]
    pub seed: u64,
    pub initial_state: Vec<f64>,
    /// Overrides merged over the named system's built-in parameters.
    #[serde(default, skip_serializing_if = "toml::Table::is_empty")]
    pub plant: toml::Table,
    pub noise: NoiseSpec,
    pub safe_set: SafeSetSection,
    pub input: InputSection,
    pub kernel: KernelSection,
    pub rkhs: RkhsBound,
    pub abstraction: AbstractionSection,
    #[serde(default)]
    pub synthesis: SynthesisSection,
    pub exploration: ExplorationSection,
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: ConfigFile = toml::from_str(text)?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(c.schema_version));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Resolves names through the default registries and validates.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let invalid = |s: String| ConfigError::Invalid(s);
        let plant = PlantRegistry::default().build(&self.system, &self.plant).map_err(|e| invalid(e.to_string()))?;
        let n = plant.state_dim();
        if self.kernel.alpha.len() != n {
            return Err(invalid(format!("kernel.alpha needs {n} entries, got {}", self.kernel.alpha.len())));
        }
        if self.kernel.lambda.len() != n {
            return Err(invalid(format!("kernel.lambda needs {n} entries, got {}", self.kernel.lambda.len())));
        }
        let kreg = KernelRegistry::default();
        let kernels = self
            .kernel
            .alpha
            .iter()
            .map(|&alpha| {
                kreg.build(&KernelSpec { name: self.kernel.name.clone(), alpha, lambda: self.kernel.lambda.clone() })
                    .map_err(|e| invalid(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let safe = SafeSet::new(self.safe_set.lower.clone(), self.safe_set.upper.clone(), self.safe_set.exclusions.clone())
            .map_err(|e| invalid(e.to_string()))?;
        let update = UpdateRegistry::default().get(&self.abstraction.update).ok_or_else(|| {
            invalid(format!("unknown abstraction update `{}`", self.abstraction.update))
        })?;
        let predecessor =
            PredecessorRegistry::default().get(&self.synthesis.predecessor).map_err(|e| invalid(e.to_string()))?;
        let cfg = RunConfig {
            system: self.system.clone(),
            plant,
            noise: self.noise.clone(),
            safe,
            inputs: InputSet { lower: self.input.lower.clone(), upper: self.input.upper.clone() },
            initial_state: self.initial_state.clone(),
            kernels,
            bound: self.rkhs.clone(),
            eta_x: self.abstraction.eta_x,
            eta_u: self.input.eta,
            eps: self.abstraction.eps.unwrap_or(self.abstraction.eta_x),
            t_exp: self.exploration.t_exp,
            rho: self.abstraction.rho,
            update: Arc::clone(&update),
            predecessor,
            max_batches: self.exploration.max_batches,
            seed: self.seed,
            timings: self.exploration.timings,
            keep_models: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
