//! Ground-truth plants `x⁺ = f(x, u) + d(x) + v`.
//!
//! The learner only ever sees `f`, `L_f` and the noise bound; `d` is for the
//! simulator and for test oracles.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gp::{GpError, KernelRegistry, KernelSpec, RkhsFunction};

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("input component {dim} = {value} outside [{lo}, {hi}]")]
    InputOutOfRange { dim: usize, value: f64, lo: f64, hi: f64 },
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("invalid plant parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Kernel(#[from] GpError),
}

pub trait Plant: Send + Sync + Debug {
    fn name(&self) -> &str;
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// Known part `f(x, u)`.
    fn nominal(&self, x: &[f64], u: &[f64]) -> Vec<f64>;
    /// Unknown part `d(x)`.
    fn hidden(&self, x: &[f64]) -> Vec<f64>;
    /// ∞-norm Lipschitz constant of `f` in `x`, uniform in `u`.
    fn lipschitz_f(&self) -> f64;
}

/// Axis-aligned input set `𝒰`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl InputSet {
    pub fn check(&self, u: &[f64]) -> Result<(), PlantError> {
        const TOL: f64 = 1e-9;
        for (i, &v) in u.iter().enumerate() {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if !(v >= lo - TOL && v <= hi + TOL) {
                return Err(PlantError::InputOutOfRange { dim: i, value: v, lo, hi });
            }
        }
        Ok(())
    }
}

/// Per-dimension noise bound `|v_i| ≤ σ_v,i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma_v: Vec<f64>,
}

impl NoiseSpec {
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.sigma_v.iter().map(|&s| if s > 0.0 { rng.gen_range(-s..=s) } else { 0.0 }).collect()
    }
}

/// One simulated step with uniform noise.
pub fn step(
    plant: &dyn Plant,
    inputs: &InputSet,
    noise: &NoiseSpec,
    x: &[f64],
    u: &[f64],
    rng: &mut impl Rng,
) -> Result<Vec<f64>, PlantError> {
    inputs.check(u)?;
    let f = plant.nominal(x, u);
    let d = plant.hidden(x);
    let v = noise.sample(rng);
    Ok(f.iter().zip(&d).zip(&v).map(|((f, d), v)| f + d + v).collect())
}

/// `y = x⁺ − f(x, u)`.
pub fn training_sample(plant: &dyn Plant, x: &[f64], u: &[f64], x_next: &[f64]) -> Vec<f64> {
    plant.nominal(x, u).iter().zip(x_next).map(|(f, xn)| xn - f).collect()
}

/// `x⁺ = A x + u + d(x)` with each `d_i` a kernel expansion.
#[derive(Debug, Clone)]
pub struct LinearRkhsPlant {
    name: String,
    a: Vec<Vec<f64>>,
    d: Vec<RkhsFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRkhsParams {
    /// State matrix, row-major.
    pub a: Vec<Vec<f64>>,
    /// Kernel the hidden drift is expanded in.
    pub kernel: KernelSpec,
    pub centers: Vec<Vec<f64>>,
    /// One coefficient vector per state dimension.
    pub coeffs: Vec<Vec<f64>>,
}

impl LinearRkhsPlant {
    pub fn new(name: &str, p: &LinearRkhsParams) -> Result<Self, PlantError> {
        let n = p.a.len();
        if n == 0 || p.a.iter().any(|r| r.len() != n) {
            return Err(PlantError::InvalidParams("state matrix must be square and nonempty".into()));
        }
        if p.coeffs.len() != n || p.coeffs.iter().any(|c| c.len() != p.centers.len()) {
            return Err(PlantError::InvalidParams("need one coefficient per center for each dimension".into()));
        }
        if p.centers.iter().any(|c| c.len() != n) {
            return Err(PlantError::InvalidParams("center dimension differs from state dimension".into()));
        }
        let kernel = KernelRegistry::default().build(&p.kernel)?;
        let d = p.coeffs.iter().map(|c| RkhsFunction::new(kernel.clone(), p.centers.clone(), c.clone())).collect();
        Ok(LinearRkhsPlant { name: name.to_string(), a: p.a.clone(), d })
    }

    /// Exact RKHS norms of the hidden components.
    pub fn hidden_norms(&self) -> Vec<f64> {
        self.d.iter().map(RkhsFunction::norm).collect()
    }
}

impl Plant for LinearRkhsPlant {
    fn name(&self) -> &str {
        &self.name
    }

    fn state_dim(&self) -> usize {
        self.a.len()
    }

    fn input_dim(&self) -> usize {
        self.a.len()
    }

    fn nominal(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        self.a.iter().zip(u).map(|(row, ui)| row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + ui).collect()
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        self.d.iter().map(|f| f.eval(x)).collect()
    }

    fn lipschitz_f(&self) -> f64 {
        self.a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

pub fn toy1d_params() -> LinearRkhsParams {
    LinearRkhsParams {
        a: vec![vec![1.2]],
        kernel: KernelSpec { name: "se".into(), alpha: 0.5, lambda: vec![1.0] },
        centers: vec![vec![-2.0], vec![-1.0], vec![0.0], vec![1.0], vec![2.0]],
        coeffs: vec![vec![0.6, -0.4, 0.3, 0.5, -0.7]],
    }
}

pub fn toy2d_params() -> LinearRkhsParams {
    LinearRkhsParams {
        a: vec![vec![1.15, 0.05], vec![0.0, 1.15]],
        kernel: KernelSpec { name: "se".into(), alpha: 0.4, lambda: vec![1.0, 1.0] },
        centers: vec![vec![-1.0, -1.0], vec![1.0, -0.5], vec![0.0, 0.0], vec![-0.5, 1.0], vec![1.0, 1.0]],
        coeffs: vec![vec![0.5, -0.6, 0.4, 0.3, -0.5], vec![-0.4, 0.3, 0.6, -0.5, 0.4]],
    }
}

pub type PlantFactory = fn(&toml::Table) -> Result<Arc<dyn Plant>, PlantError>;

/// Name → constructor table for built-in plants.
pub struct PlantRegistry {
    entries: BTreeMap<String, PlantFactory>,
}

impl PlantRegistry {
    pub fn empty() -> Self {
        PlantRegistry { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, name: &str, factory: PlantFactory) {
        self.entries.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    /// Builds `name` with `overrides` merged over its defaults.
    pub fn build(&self, name: &str, overrides: &toml::Table) -> Result<Arc<dyn Plant>, PlantError> {
        let f = self.entries.get(name).ok_or_else(|| PlantError::UnknownSystem(name.to_string()))?;
        f(overrides)
    }
}

impl Default for PlantRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("acc", |o| Ok(Arc::new(crate::bench_acc::AccPlant::new(merge_params(crate::bench_acc::AccParams::default(), o)?)?)));
        r.register("toy1d", |o| Ok(Arc::new(LinearRkhsPlant::new("toy1d", &merge_params(toy1d_params(), o)?)?)));
        r.register("toy2d", |o| Ok(Arc::new(LinearRkhsPlant::new("toy2d", &merge_params(toy2d_params(), o)?)?)));
        r
    }
}

/// Overlays the keys of `overrides` on the serialized `defaults`.
pub fn merge_params<T>(defaults: T, overrides: &toml::Table) -> Result<T, PlantError>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    let mut table = toml::Table::try_from(&defaults).map_err(|e| PlantError::InvalidParams(e.to_string()))?;
    for (k, v) in overrides {
        table.insert(k.clone(), v.clone());
    }
    toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| PlantError::InvalidParams(e.to_string()))
}
