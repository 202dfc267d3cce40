//! Symbolic models over the safe-set lattice, and their lazy refresh.
//!
//! Successor sets are axis-aligned products of lattice indices, stored as a
//! flat table of `[lo₀..lo_{n−1}, hi₀..hi_{n−1}]` rows, one per
//! (state, input) pair. A pair whose box is empty, leaves the lattice, or
//! touches an unsafe lattice point is disabled.

use std::collections::BTreeMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gp::IntervalCache;
use crate::plant::Plant;
use crate::tsys::{box_members, Coords, IndexBox, Lattice, StateSet, SNAP_TOL};

/// Constants entering the successor over-approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractionParams {
    pub eta_x: f64,
    pub eps: f64,
    pub l_f: f64,
    /// Per-dimension Hölder constants of the learned drift.
    pub l_i: Vec<f64>,
    pub sigma_v: Vec<f64>,
}

impl AbstractionParams {
    /// `L_f·ε + L_i·√ε + η_x` for dimension `i`.
    pub fn slack(&self, i: usize) -> f64 {
        self.l_f * self.eps + self.l_i[i] * self.eps.sqrt() + self.eta_x
    }
}

/// `[h̲_i, h̄_i]` from the nominal successor `f` and the cached `[r̲_i, r̄_i]`.
pub fn successor_bounds(f: &[f64], r: &[(f64, f64)], params: &AbstractionParams) -> Vec<(f64, f64)> {
    f.iter()
        .enumerate()
        .map(|(i, &fi)| {
            let s = params.slack(i);
            let sv = params.sigma_v[i];
            (r[i].0 + fi - sv - s, r[i].1 + fi + sv + s)
        })
        .collect()
}

/// Lattice indices covered by a real interval box.
pub fn interval_to_box(bounds: &[(f64, f64)], eta: f64) -> IndexBox {
    let lo: Coords = bounds.iter().map(|(l, _)| (l / eta - SNAP_TOL).ceil() as i64).collect();
    let hi: Coords = bounds.iter().map(|(_, h)| (h / eta + SNAP_TOL).floor() as i64).collect();
    IndexBox { lo, hi }
}

/// Flat storage of optional successor boxes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionTable {
    dim: usize,
    inputs: usize,
    data: Vec<i64>,
}

const DISABLED_LO: i64 = i64::MAX;
const DISABLED_HI: i64 = i64::MIN;

impl TransitionTable {
    pub fn disabled(states: usize, inputs: usize, dim: usize) -> Self {
        let mut data = Vec::with_capacity(states * inputs * 2 * dim);
        for _ in 0..states * inputs {
            data.extend(std::iter::repeat_n(DISABLED_LO, dim));
            data.extend(std::iter::repeat_n(DISABLED_HI, dim));
        }
        TransitionTable { dim, inputs, data }
    }

    fn row_len(&self) -> usize {
        2 * self.dim
    }

    fn state_len(&self) -> usize {
        self.inputs * self.row_len()
    }

    pub fn states(&self) -> usize {
        self.data.len() / self.state_len().max(1)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn row(&self, state: usize, input: usize) -> &[i64] {
        let k = state * self.state_len() + input * self.row_len();
        &self.data[k..k + self.row_len()]
    }

    pub fn is_enabled(&self, state: usize, input: usize) -> bool {
        self.row(state, input)[0] != DISABLED_LO
    }

    pub fn get(&self, state: usize, input: usize) -> Option<IndexBox> {
        let r = self.row(state, input);
        if r[0] == DISABLED_LO {
            return None;
        }
        Some(IndexBox::new(&r[..self.dim], &r[self.dim..]))
    }

    pub fn set(&mut self, state: usize, input: usize, b: Option<&IndexBox>) {
        let (d, rl) = (self.dim, self.row_len());
        let k = state * self.state_len() + input * rl;
        let row = &mut self.data[k..k + rl];
        write_row(row, d, b);
    }

    fn state_rows_mut(&mut self) -> std::slice::ChunksMut<'_, i64> {
        let sl = self.state_len();
        self.data.chunks_mut(sl)
    }
}

fn write_row(row: &mut [i64], d: usize, b: Option<&IndexBox>) {
    match b {
        Some(b) => {
            row[..d].copy_from_slice(&b.lo);
            row[d..].copy_from_slice(&b.hi);
        }
        None => {
            row[..d].fill(DISABLED_LO);
            row[d..].fill(DISABLED_HI);
        }
    }
}

/// Finite abstraction `S_𝗊` restricted to the safe lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicModel {
    pub state_lattice: Lattice,
    pub input_lattice: Lattice,
    pub eps: f64,
    /// Lattice points of the safe set.
    pub safe_states: StateSet,
    pub table: TransitionTable,
    pub initial: Option<usize>,
}

impl SymbolicModel {
    pub fn n_states(&self) -> usize {
        self.state_lattice.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.input_lattice.len()
    }

    pub fn get(&self, state: usize, input: usize) -> Option<IndexBox> {
        self.table.get(state, input)
    }

    pub fn enabled_inputs(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_inputs()).filter(move |&u| self.table.is_enabled(state, u))
    }

    /// Number of enabled (state, input) pairs.
    pub fn enabled_count(&self) -> usize {
        (0..self.n_states()).map(|s| self.enabled_inputs(s).count()).sum()
    }

    /// `Σ |G(x, u)|` over enabled pairs.
    pub fn transition_count(&self) -> u64 {
        (0..self.n_states())
            .into_par_iter()
            .map(|s| self.enabled_inputs(s).map(|u| self.table.get(s, u).unwrap().cardinality()).sum::<u64>())
            .sum()
    }
}

/// Everything the abstraction needs besides the interval cache.
#[derive(Debug, Clone)]
pub struct AbstractionContext {
    pub plant: Arc<dyn Plant>,
    pub state_lattice: Lattice,
    pub input_lattice: Lattice,
    pub safe_states: StateSet,
    pub params: AbstractionParams,
    pub initial: Option<usize>,
}

impl AbstractionContext {
    /// Successor intervals of lattice state `state` under lattice input `input`.
    pub fn successor_interval(&self, state: usize, input: usize, cache: &IntervalCache) -> Vec<(f64, f64)> {
        let x = self.state_lattice.point_of(state);
        let u = self.input_lattice.point_of(input);
        let f = self.plant.nominal(&x, &u);
        let r: Vec<(f64, f64)> = (0..f.len()).map(|i| cache.get(state, i)).collect();
        successor_bounds(&f, &r, &self.params)
    }

    /// The stored box, or `None` when the restriction disables the input.
    pub fn transition(&self, state: usize, input: usize, cache: &IntervalCache) -> Option<IndexBox> {
        let b = interval_to_box(&self.successor_interval(state, input, cache), self.state_lattice.eta());
        if b.is_empty() || !box_members(&b, &self.state_lattice, &self.safe_states) {
            None
        } else {
            Some(b)
        }
    }

    fn fill_state(&self, state: usize, cache: &IntervalCache, rows: &mut [i64]) {
        let d = self.state_lattice.dim();
        for (u, row) in rows.chunks_mut(2 * d).enumerate() {
            let b = if self.safe_states.contains(state) { self.transition(state, u, cache) } else { None };
            write_row(row, d, b.as_ref());
        }
    }

    fn empty_model(&self) -> SymbolicModel {
        SymbolicModel {
            state_lattice: self.state_lattice.clone(),
            input_lattice: self.input_lattice.clone(),
            eps: self.params.eps,
            safe_states: self.safe_states.clone(),
            table: TransitionTable::disabled(self.state_lattice.len(), self.input_lattice.len(), self.state_lattice.dim()),
            initial: self.initial,
        }
    }
}

/// Recomputes every safe state.
pub fn build_full(ctx: &AbstractionContext, cache: &IntervalCache) -> SymbolicModel {
    let mut model = ctx.empty_model();
    model
        .table
        .state_rows_mut()
        .collect::<Vec<_>>()
        .into_par_iter()
        .enumerate()
        .for_each(|(s, rows)| ctx.fill_state(s, cache, rows));
    model
}

/// Batch that last recomputed each state, with the variances seen then.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateLog {
    pub dims: usize,
    pub batch: Vec<usize>,
    /// `states × dims`, row-major.
    pub variances: Vec<f64>,
}

impl UpdateLog {
    pub fn new(batch: usize, variances: Vec<f64>, dims: usize) -> Self {
        let states = variances.len() / dims.max(1);
        UpdateLog { dims, batch: vec![batch; states], variances }
    }

    /// `Σ_i σ²_i(snapshot) − σ²_i(fresh)` at `state`.
    pub fn reduction(&self, state: usize, fresh: &[f64]) -> f64 {
        let k = state * self.dims;
        (0..self.dims).map(|i| self.variances[k + i] - fresh[k + i]).sum()
    }
}

/// States whose summed variance dropped by more than `rho`.
pub fn stale_states(model: &SymbolicModel, log: &UpdateLog, fresh: &[f64], rho: f64) -> FixedBitSet {
    let mut out = FixedBitSet::with_capacity(model.n_states());
    for s in model.safe_states.iter() {
        if log.reduction(s, fresh) > rho {
            out.insert(s);
        }
    }
    out
}

/// Recomputes only the states whose variance dropped by more than `rho`;
/// returns the refreshed model and the number of recomputed states.
pub fn lazy_update(
    ctx: &AbstractionContext,
    model: &SymbolicModel,
    log: &mut UpdateLog,
    cache: &IntervalCache,
    fresh: &[f64],
    rho: f64,
    batch: usize,
) -> (SymbolicModel, usize) {
    let stale = stale_states(model, log, fresh, rho);
    let mut next = model.clone();
    next.table
        .state_rows_mut()
        .collect::<Vec<_>>()
        .into_par_iter()
        .enumerate()
        .filter(|(s, _)| stale.contains(*s))
        .for_each(|(s, rows)| ctx.fill_state(s, cache, rows));
    let d = log.dims;
    for s in stale.ones() {
        log.batch[s] = batch;
        log.variances[s * d..(s + 1) * d].copy_from_slice(&fresh[s * d..(s + 1) * d]);
    }
    (next, stale.count_ones(..))
}

/// Result of one abstraction refresh.
pub struct UpdateOutcome {
    pub model: SymbolicModel,
    pub log: UpdateLog,
    pub recomputed: usize,
}

/// How the model is brought up to date after a batch of data.
pub trait AbstractionUpdate: Send + Sync {
    fn name(&self) -> &str;
    fn update(
        &self,
        ctx: &AbstractionContext,
        prev: Option<(&SymbolicModel, &UpdateLog)>,
        cache: &IntervalCache,
        fresh: &[f64],
        rho: f64,
        batch: usize,
    ) -> UpdateOutcome;
}

pub struct FullRebuild;

impl AbstractionUpdate for FullRebuild {
    fn name(&self) -> &str {
        "full"
    }

    fn update(
        &self,
        ctx: &AbstractionContext,
        _prev: Option<(&SymbolicModel, &UpdateLog)>,
        cache: &IntervalCache,
        fresh: &[f64],
        _rho: f64,
        batch: usize,
    ) -> UpdateOutcome {
        let model = build_full(ctx, cache);
        let recomputed = model.safe_states.count();
        UpdateOutcome { model, log: UpdateLog::new(batch, fresh.to_vec(), ctx.state_lattice.dim()), recomputed }
    }
}

pub struct LazyUpdate;

impl AbstractionUpdate for LazyUpdate {
    fn name(&self) -> &str {
        "lazy"
    }

    fn update(
        &self,
        ctx: &AbstractionContext,
        prev: Option<(&SymbolicModel, &UpdateLog)>,
        cache: &IntervalCache,
        fresh: &[f64],
        rho: f64,
        batch: usize,
    ) -> UpdateOutcome {
        match prev {
            None => FullRebuild.update(ctx, None, cache, fresh, rho, batch),
            Some((model, log)) => {
                let mut log = log.clone();
                let (model, recomputed) = lazy_update(ctx, model, &mut log, cache, fresh, rho, batch);
                UpdateOutcome { model, log, recomputed }
            }
        }
    }
}

/// Name → abstraction-update strategy.
pub struct UpdateRegistry {
    entries: BTreeMap<String, Arc<dyn AbstractionUpdate>>,
}

impl UpdateRegistry {
    pub fn empty() -> Self {
        UpdateRegistry { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, s: Arc<dyn AbstractionUpdate>) {
        self.entries.insert(s.name().to_string(), s);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn AbstractionUpdate>> {
        self.entries.get(name).cloned()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

impl Default for UpdateRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(FullRebuild));
        r.register(Arc::new(LazyUpdate));
        r
    }
}

/// Explicit finite transition system with points in ℝⁿ.
#[derive(Debug, Clone)]
pub struct FiniteTs {
    pub points: Vec<Vec<f64>>,
    pub initial: Option<usize>,
    /// `succ[x][u]`: `None` when `u` is disabled at `x`, else the successor ids.
    pub succ: Vec<Vec<Option<Vec<usize>>>>,
}

impl FiniteTs {
    /// Explicit view of the safe part of a symbolic model. Ids are the
    /// model's lattice ids; unsafe states keep no inputs.
    pub fn from_model(model: &SymbolicModel) -> Self {
        let n = model.n_states();
        let points = (0..n).map(|s| model.state_lattice.point_of(s)).collect();
        let succ = (0..n)
            .map(|s| {
                (0..model.n_inputs())
                    .map(|u| model.get(s, u).map(|b| b.ids(&model.state_lattice)))
                    .collect()
            })
            .collect();
        FiniteTs { points, initial: model.initial, succ }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AsrViolation {
    /// The initial states are not related.
    Initial { xa: Option<usize>, xb: Option<usize> },
    /// No input of `b` matches input `ua` of `a`.
    Step { xa: usize, xb: usize, ua: usize },
}

/// Checks that `R(ε) = {‖x_a − x_b‖_∞ ≤ ε}` is an alternating simulation
/// from `a` to `b`. Returns the first violation found.
pub fn check_asr_finite(a: &FiniteTs, b: &FiniteTs, eps: f64) -> Result<(), AsrViolation> {
    let tol = 1e-9;
    let related = |p: &[f64], q: &[f64]| p.iter().zip(q).all(|(x, y)| (x - y).abs() <= eps + tol);
    // relation adjacency a-state → b-states
    let adj: Vec<Vec<usize>> = a
        .points
        .par_iter()
        .map(|pa| (0..b.points.len()).filter(|&j| related(pa, &b.points[j])).collect())
        .collect();
    match (a.initial, b.initial) {
        (Some(ia), Some(ib)) if adj[ia].contains(&ib) => {}
        (None, None) => {}
        (xa, xb) => return Err(AsrViolation::Initial { xa, xb }),
    }
    for xa in 0..a.points.len() {
        for &xb in &adj[xa] {
            for (ua, ga) in a.succ[xa].iter().enumerate() {
                let Some(ga) = ga else { continue };
                let mut near = FixedBitSet::with_capacity(b.points.len());
                for &xa2 in ga {
                    for &j in &adj[xa2] {
                        near.insert(j);
                    }
                }
                let n_in = b.succ[xb].len();
                let order = std::iter::once(ua).filter(|&u| u < n_in).chain((0..n_in).filter(|&u| u != ua));
                let matched = order
                    .filter_map(|ub| b.succ[xb][ub].as_ref())
                    .any(|gb| gb.iter().all(|&j| near.contains(j)));
                if !matched {
                    return Err(AsrViolation::Step { xa, xb, ua });
                }
            }
        }
    }
    Ok(())
}
