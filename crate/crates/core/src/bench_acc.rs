//! Adaptive cruise control benchmark.
//!
//! States are (ego speed `x1`, lead speed `x2`, headway `x3`); the input is
//! the ego acceleration. Rolling and aerodynamic drag form the hidden drift.

use serde::{Deserialize, Serialize};

use crate::config::{
    AbstractionSection, ConfigError, ConfigFile, ExplorationSection, InputSection, KernelSection, SafeSetSection,
    SynthesisSection, SCHEMA_VERSION,
};
use crate::explore::RunConfig;
use crate::gp::{global_bound, RkhsBound, SeKernel};
use crate::plant::{NoiseSpec, Plant, PlantError};
use crate::tsys::{HalfSpace, SafeSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccParams {
    pub delta: f64,
    pub m1: f64,
    pub m2: f64,
    pub nu1: [f64; 3],
    pub nu2: [f64; 3],
    /// Bound on the lead vehicle's acceleration, treated as noise.
    pub a_l_max: f64,
}

impl Default for AccParams {
    fn default() -> Self {
        AccParams { delta: 1.0, m1: 1000.0, m2: 1000.0, nu1: [40.0, 1.0, 0.2], nu2: [50.0, 2.0, 0.1], a_l_max: 0.02 }
    }
}

#[derive(Debug, Clone)]
pub struct AccPlant {
    p: AccParams,
}

impl AccPlant {
    pub fn new(p: AccParams) -> Result<Self, PlantError> {
        if !(p.delta > 0.0 && p.m1 > 0.0 && p.m2 > 0.0 && p.a_l_max >= 0.0)
            || p.nu1.iter().chain(&p.nu2).any(|v| *v < 0.0)
        {
            return Err(PlantError::InvalidParams(format!("{p:?}")));
        }
        Ok(AccPlant { p })
    }

    pub fn params(&self) -> &AccParams {
        &self.p
    }
}

fn drag(nu: &[f64; 3], v: f64) -> f64 {
    nu[0] + nu[1] * v + nu[2] * v * v
}

impl Plant for AccPlant {
    fn name(&self) -> &str {
        "acc"
    }

    fn state_dim(&self) -> usize {
        3
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn nominal(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let d = self.p.delta;
        vec![x[0], x[1] + d * u[0], x[2] + d * (x[0] - x[1])]
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        let d = self.p.delta;
        vec![-d * drag(&self.p.nu1, x[0]) / self.p.m1, -d * drag(&self.p.nu2, x[1]) / self.p.m2, 0.0]
    }

    fn lipschitz_f(&self) -> f64 {
        // rows of ∂f/∂x: (1,0,0), (0,1,0), (Δ,−Δ,1)
        1.0 + 2.0 * self.p.delta
    }
}

/// `max |d_i|` over the box; drag is increasing for non-negative speeds.
pub fn drag_bounds(p: &AccParams, lower: &[f64], upper: &[f64]) -> [f64; 3] {
    let m1 = [lower[0], upper[0]].iter().map(|&v| (p.delta * drag(&p.nu1, v) / p.m1).abs()).fold(0.0, f64::max);
    let m2 = [lower[1], upper[1]].iter().map(|&v| (p.delta * drag(&p.nu2, v) / p.m2).abs()).fold(0.0, f64::max);
    [m1, m2, 0.0]
}

/// Which side of `2·x2 = x3` is unsafe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObstacleReading {
    /// `{2·x2 ≤ x3}` removed.
    Literal,
    /// `{x3 ≤ 2·x2}` removed.
    Headway,
}

pub fn acc_safe_set(reading: ObstacleReading) -> SafeSet {
    let ex = match reading {
        ObstacleReading::Literal => HalfSpace { a: vec![0.0, 2.0, -1.0], b: 0.0 },
        ObstacleReading::Headway => HalfSpace { a: vec![0.0, -2.0, 1.0], b: 0.0 },
    };
    SafeSet::new(vec![18.0, 15.0, 30.0], vec![25.0, 25.0, 100.0], vec![ex]).expect("static safe set")
}

pub const ACC_ALPHA: [f64; 3] = [0.5, 0.5, 0.05];
pub const ACC_LAMBDA: [f64; 3] = [10.0, 10.0, 50.0];
pub const ACC_B: [f64; 3] = [1.0, 1.0, 1.0];

/// The benchmark as a config document.
pub fn acc_config_file(reading: ObstacleReading) -> ConfigFile {
    let p = AccParams::default();
    let safe = acc_safe_set(reading);
    ConfigFile {
        schema_version: SCHEMA_VERSION,
        system: "acc".into(),
        seed: 0,
        initial_state: vec![20.0, 20.0, 60.0],
        plant: toml::Table::new(),
        noise: NoiseSpec { sigma_v: vec![p.delta * p.a_l_max, 0.0, 0.0] },
        safe_set: SafeSetSection { lower: safe.lower, upper: safe.upper, exclusions: safe.exclusions },
        input: InputSection { lower: vec![-1.0], upper: vec![1.0], eta: 0.2 },
        kernel: KernelSection { name: "se".into(), alpha: ACC_ALPHA.to_vec(), lambda: ACC_LAMBDA.to_vec() },
        rkhs: RkhsBound { b: ACC_B.to_vec() },
        abstraction: AbstractionSection { eta_x: 0.5, eps: Some(0.5), update: "lazy".into(), rho: 0.2 },
        synthesis: SynthesisSection::default(),
        exploration: ExplorationSection { t_exp: 80, max_batches: 50, timings: true },
    }
}

pub fn acc_config() -> Result<RunConfig, ConfigError> {
    acc_config_file(ObstacleReading::Literal).resolve()
}

/// Ratio `α_i·B_i / max|d_i|` per dimension (∞ where `d_i ≡ 0`).
pub fn containment_margin(cfg: &ConfigFile) -> Vec<f64> {
    let p = AccParams::default();
    let maxd = drag_bounds(&p, &cfg.safe_set.lower, &cfg.safe_set.upper);
    (0..3)
        .map(|i| {
            let k = SeKernel::new(cfg.kernel.alpha[i], cfg.kernel.lambda.clone()).expect("valid kernel");
            let g = global_bound(&k, cfg.rkhs.b[i]);
            if maxd[i] == 0.0 {
                f64::INFINITY
            } else {
                g / maxd[i]
            }
        })
        .collect()
}
