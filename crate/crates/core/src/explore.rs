//! Safe exploration and the learn–abstract–synthesize loop.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{AbstractionContext, AbstractionParams, AbstractionUpdate, SymbolicModel};
use crate::gp::{continuity_constant, global_bound, Dataset, GpError, GpModel, IntervalCache, Kernel, RkhsBound};
use crate::plant::{self, InputSet, NoiseSpec, Plant, PlantError};
use crate::synthesis::{safety_game, Predecessor, SafetyController, SynthesisError};
use crate::tsys::{lattice_points_of_set, Lattice, SafeSet, StateSet, TsysError};

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("state {x:?} has no admissible input")]
    NotInWinningSet { x: Vec<f64> },
    #[error("state {x:?} left the safe set at step {t}")]
    SafetyViolation { t: usize, x: Vec<f64> },
    #[error("winning set shrank at batch {batch}")]
    NonMonotone { batch: usize },
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Tsys(#[from] TsysError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

/// Fully resolved run parameters.
#[derive(Clone)]
pub struct RunConfig {
    pub system: String,
    pub plant: Arc<dyn Plant>,
    pub noise: NoiseSpec,
    pub safe: SafeSet,
    pub inputs: InputSet,
    pub initial_state: Vec<f64>,
    pub kernels: Vec<Arc<dyn Kernel>>,
    pub bound: RkhsBound,
    pub eta_x: f64,
    pub eta_u: f64,
    pub eps: f64,
    pub t_exp: usize,
    pub rho: f64,
    pub update: Arc<dyn AbstractionUpdate>,
    pub predecessor: Arc<dyn Predecessor>,
    pub max_batches: usize,
    pub seed: u64,
    /// Record wall-clock timings; off writes zeros so artifacts are reproducible.
    pub timings: bool,
    /// Keep every batch's model in the run record.
    pub keep_models: bool,
}

impl std::fmt::Debug for RunConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RunConfig")
            .field("system", &self.system)
            .field("eta_x", &self.eta_x)
            .field("eta_u", &self.eta_u)
            .field("eps", &self.eps)
            .field("t_exp", &self.t_exp)
            .field("rho", &self.rho)
            .field("update", &self.update.name())
            .field("predecessor", &self.predecessor.name())
            .field("max_batches", &self.max_batches)
            .field("seed", &self.seed)
            .finish()
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ExploreError> {
        let n = self.plant.state_dim();
        let m = self.plant.input_dim();
        let bad = |s: String| Err(ExploreError::Config(s));
        if !(self.eta_x > 0.0) || !(self.eta_u > 0.0) {
            return bad("eta_x and eta_u must be positive".into());
        }
        if self.eps < self.eta_x {
            return bad(format!("eps = {} must be >= eta_x = {} for the approximate alternating simulation", self.eps, self.eta_x));
        }
        if self.t_exp == 0 {
            return bad("t_exp must be at least 1".into());
        }
        if self.safe.dim() != n || self.initial_state.len() != n || self.noise.sigma_v.len() != n {
            return bad(format!("safe set, initial state and noise must have dimension {n}"));
        }
        if self.kernels.len() != n || self.bound.b.len() != n {
            return bad(format!("need {n} kernels and {n} RKHS bounds"));
        }
        if self.bound.b.iter().any(|b| !(*b > 0.0)) {
            return bad("RKHS bounds must be positive".into());
        }
        if self.noise.sigma_v.iter().any(|s| !(*s >= 0.0)) {
            return bad("noise bounds must be non-negative".into());
        }
        if self.inputs.lower.len() != m || self.inputs.upper.len() != m {
            return bad(format!("input set must have dimension {m}"));
        }
        if self.inputs.lower.iter().zip(&self.inputs.upper).any(|(l, h)| !(l <= h)) {
            return bad("input box is empty".into());
        }
        Ok(())
    }
}

/// Lattices, safe lattice, `Q_0` and the abstraction context of a config.
pub struct Setup {
    pub ctx: AbstractionContext,
    pub q0: StateSet,
    pub global_bounds: Vec<f64>,
}

pub fn setup(cfg: &RunConfig) -> Result<Setup, ExploreError> {
    cfg.validate()?;
    let sl = Lattice::new(cfg.eta_x, &cfg.safe.lower, &cfg.safe.upper)?;
    let il = Lattice::new(cfg.eta_u, &cfg.inputs.lower, &cfg.inputs.upper)?;
    let safe_states = lattice_points_of_set(&sl, &cfg.safe);
    let q0 = match cfg.safe.interior(cfg.eps) {
        Ok(inner) => lattice_points_of_set(&sl, &inner),
        Err(TsysError::EmptyInterior { .. }) => StateSet::empty(sl.len()),
        Err(e) => return Err(e.into()),
    };
    let n = sl.dim();
    let l_i = (0..n).map(|i| continuity_constant(cfg.kernels[i].as_ref(), cfg.bound.b[i])).collect();
    let global_bounds = (0..n).map(|i| global_bound(cfg.kernels[i].as_ref(), cfg.bound.b[i])).collect();
    let initial = sl.nearest(&cfg.initial_state).ok().and_then(|i| sl.id_of(&i));
    let params = AbstractionParams {
        eta_x: cfg.eta_x,
        eps: cfg.eps,
        l_f: cfg.plant.lipschitz_f(),
        l_i,
        sigma_v: cfg.noise.sigma_v.clone(),
    };
    let ctx = AbstractionContext { plant: cfg.plant.clone(), state_lattice: sl, input_lattice: il, safe_states, params, initial };
    Ok(Setup { ctx, q0, global_bounds })
}

/// Picks an input id from the refined controller at `x`: uniformly at batch 0,
/// afterwards the one whose mean-predicted successor has the largest summed
/// posterior variance (lowest id on ties).
pub fn select_input(
    x: &[f64],
    ctrl: &SafetyController,
    plant: &dyn Plant,
    gp: Option<&GpModel>,
    cache: &IntervalCache,
    batch: usize,
    rng: &mut impl Rng,
) -> Result<usize, ExploreError> {
    let cand = ctrl.refine_at(x);
    if cand.is_empty() {
        return Err(ExploreError::NotInWinningSet { x: x.to_vec() });
    }
    let gp = match gp {
        Some(g) if batch > 0 => g,
        _ => return Ok(cand[rng.gen_range(0..cand.len())]),
    };
    let near = ctrl.state_lattice.nearest(x)?;
    let sid = ctrl.state_lattice.id_of(&near).expect("nearest lies on the lattice");
    let dhat: Vec<f64> = (0..x.len()).map(|i| cache.center_radius(sid, i).0).collect();
    let mut best = (cand[0], f64::NEG_INFINITY);
    for &u in &cand {
        let up = ctrl.input_point(u);
        let xp: Vec<f64> = plant.nominal(x, &up).iter().zip(&dhat).map(|(f, d)| f + d).collect();
        let score = gp.total_variance(&xp)?;
        if score > best.1 {
            best = (u, score);
        }
    }
    Ok(best.0)
}

/// One logged closed-loop step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajRow {
    pub t: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
}

/// Everything an exploration episode touches.
pub struct Explorer<'a> {
    pub plant: &'a dyn Plant,
    pub inputs: &'a InputSet,
    pub noise: &'a NoiseSpec,
    pub safe: &'a SafeSet,
}

impl Explorer<'_> {
    /// Runs `t_exp` steps from `x0`, appending to `data` and `log`.
    #[allow(clippy::too_many_arguments)]
    pub fn safe_explore(
        &self,
        x0: &[f64],
        t_exp: usize,
        ctrl: &SafetyController,
        gp: Option<&GpModel>,
        cache: &IntervalCache,
        batch: usize,
        data: &mut Dataset,
        log: &mut Vec<TrajRow>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>, ExploreError> {
        let mut x = x0.to_vec();
        for _ in 0..t_exp {
            let uid = select_input(&x, ctrl, self.plant, gp, cache, batch, rng)?;
            let u = ctrl.input_point(uid);
            let xn = plant::step(self.plant, self.inputs, self.noise, &x, &u, rng)?;
            let y = plant::training_sample(self.plant, &x, &u, &xn);
            data.push(&x, &y);
            let t = log.len();
            log.push(TrajRow { t, x: x.clone(), u, y });
            if !self.safe.contains(&xn) {
                return Err(ExploreError::SafetyViolation { t: t + 1, x: xn });
            }
            x = xn;
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxBatches,
    Infeasible,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxBatches => "max_batches",
            Termination::Infeasible => "infeasible",
        }
    }
}

/// Per-batch summary, the rows of `batches.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T_N")]
    pub t_n: usize,
    pub winning: usize,
    pub transitions: u64,
    pub t_abstract_ms: f64,
    pub t_game_ms: f64,
    pub recomputed: usize,
    pub game_iterations: usize,
}

/// Complete record of one run.
#[derive(Debug, Clone)]
pub struct ExplorationRun {
    pub batches: Vec<BatchRecord>,
    pub trajectory: Vec<TrajRow>,
    /// State reached after the last logged step.
    pub final_state: Vec<f64>,
    pub dataset: Dataset,
    pub termination: Termination,
    pub model: SymbolicModel,
    pub controller: SafetyController,
    pub winning_history: Vec<StateSet>,
    /// Every batch's model when `keep_models` is set.
    pub models: Vec<SymbolicModel>,
    pub safe_state_count: usize,
    pub q0_count: usize,
}

fn ms(t: Instant, on: bool) -> f64 {
    if on {
        t.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

/// Runs the whole loop: conservative model, then explore / learn / abstract /
/// synthesize until the winning set stops growing.
pub fn run(cfg: &RunConfig) -> Result<ExplorationRun, ExploreError> {
    let Setup { ctx, q0, global_bounds } = setup(cfg)?;
    let n = ctx.state_lattice.dim();
    let states = ctx.state_lattice.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cache = IntervalCache::new(states, &global_bounds);

    let t = Instant::now();
    let prior: Vec<f64> = (0..states)
        .flat_map(|s| {
            let x = ctx.state_lattice.point_of(s);
            cfg.kernels.iter().map(move |k| k.eval(&x, &x)).collect::<Vec<_>>()
        })
        .collect();
    let full = crate::abstraction::FullRebuild;
    let out = full.update(&ctx, None, &cache, &prior, cfg.rho, 0);
    let (mut model, mut log) = (out.model, out.log);
    let t_abs = ms(t, cfg.timings);
    let t = Instant::now();
    let (mut ctrl, mut trace) = safety_game(&model, &q0, cfg.predecessor.as_ref(), None)?;
    let mut batches = vec![BatchRecord {
        n: 0,
        t_n: 0,
        winning: ctrl.winning.count(),
        transitions: model.transition_count(),
        t_abstract_ms: t_abs,
        t_game_ms: ms(t, cfg.timings),
        recomputed: out.recomputed,
        game_iterations: trace.sets.len(),
    }];
    let mut winning_history = vec![ctrl.winning.clone()];
    let mut models = if cfg.keep_models { vec![model.clone()] } else { Vec::new() };
    let mut data = Dataset::new(n);
    let mut trajectory = Vec::new();
    let mut x = cfg.initial_state.clone();

    let finish = |termination, batches, trajectory, x, data, model, ctrl, winning_history, models| ExplorationRun {
        batches,
        trajectory,
        final_state: x,
        dataset: data,
        termination,
        model,
        controller: ctrl,
        winning_history,
        models,
        safe_state_count: ctx.safe_states.count(),
        q0_count: q0.count(),
    };

    if !cfg.safe.contains(&x) || ctrl.refine_at(&x).is_empty() {
        return Ok(finish(Termination::Infeasible, batches, trajectory, x, data, model, ctrl, winning_history, models));
    }

    let explorer = Explorer { plant: cfg.plant.as_ref(), inputs: &cfg.inputs, noise: &cfg.noise, safe: &cfg.safe };
    let mut gp: Option<GpModel> = None;
    let mut termination = Termination::MaxBatches;
    for batch in 1..=cfg.max_batches {
        x = explorer.safe_explore(&x, cfg.t_exp, &ctrl, gp.as_ref(), &cache, batch - 1, &mut data, &mut trajectory, &mut rng)?;
        let t = Instant::now();
        let g = GpModel::fit(&cfg.kernels, &cfg.noise.sigma_v, &cfg.bound, &data)?;
        let fresh = cache.refresh(&ctx.state_lattice, &g)?;
        let strategy: &dyn AbstractionUpdate = if batch == 1 { &full } else { cfg.update.as_ref() };
        let out = strategy.update(&ctx, Some((&model, &log)), &cache, &fresh, cfg.rho, batch);
        model = out.model;
        log = out.log;
        let t_abs = ms(t, cfg.timings);
        let t = Instant::now();
        let (c, tr) = safety_game(&model, &q0, cfg.predecessor.as_ref(), Some(&trace))?;
        let t_game = ms(t, cfg.timings);
        if !ctrl.winning.is_subset(&c.winning) {
            return Err(ExploreError::NonMonotone { batch });
        }
        let converged = c.winning == ctrl.winning;
        batches.push(BatchRecord {
            n: batch,
            t_n: data.len(),
            winning: c.winning.count(),
            transitions: model.transition_count(),
            t_abstract_ms: t_abs,
            t_game_ms: t_game,
            recomputed: out.recomputed,
            game_iterations: tr.sets.len(),
        });
        winning_history.push(c.winning.clone());
        if cfg.keep_models {
            models.push(model.clone());
        }
        ctrl = c;
        trace = tr;
        gp = Some(g);
        if converged {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(finish(termination, batches, trajectory, x, data, model, ctrl, winning_history, models))
}

