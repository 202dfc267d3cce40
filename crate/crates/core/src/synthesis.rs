//! Safety games over symbolic models.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::abstraction::SymbolicModel;
use crate::tsys::{box_members, Lattice, StateSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("previous-batch set is not contained in the current iterate ({extra} states outside)")]
    PrerequisiteViolated { extra: usize },
    #[error("unknown predecessor strategy `{0}`")]
    UnknownStrategy(String),
}

fn has_safe_input(model: &SymbolicModel, s: usize, q: &StateSet) -> bool {
    model
        .enabled_inputs(s)
        .any(|u| box_members(&model.table.get(s, u).unwrap(), &model.state_lattice, q))
}

/// `{x ∈ q : ∃ enabled u, G(x, u) ⊆ q}`.
pub fn pre(model: &SymbolicModel, q: &StateSet) -> StateSet {
    let members: Vec<usize> = q.iter().collect();
    let keep: Vec<usize> = members.into_par_iter().filter(|&s| has_safe_input(model, s, q)).collect();
    StateSet::from_ids(q.universe(), keep)
}

/// `pre(model, q)` given a set `prev ⊆ q` already known to be in the result.
/// Only `q \ prev` is examined; returns the result and the examined count.
pub fn pre_incremental(model: &SymbolicModel, q: &StateSet, prev: &StateSet) -> Result<(StateSet, usize), SynthesisError> {
    if !prev.is_subset(q) {
        return Err(SynthesisError::PrerequisiteViolated { extra: prev.difference(q).count() });
    }
    let todo: Vec<usize> = q.difference(prev).iter().collect();
    let examined = todo.len();
    let keep: Vec<usize> = todo.into_par_iter().filter(|&s| has_safe_input(model, s, q)).collect();
    let mut out = prev.clone();
    for s in keep {
        out.insert(s);
    }
    Ok((out, examined))
}

/// One predecessor sweep, optionally seeded by the previous batch's iterate.
pub trait Predecessor: Send + Sync {
    fn name(&self) -> &str;
    fn sweep(&self, model: &SymbolicModel, q: &StateSet, prev: Option<&StateSet>) -> Result<StateSet, SynthesisError>;
}

pub struct PlainPre;

impl Predecessor for PlainPre {
    fn name(&self) -> &str {
        "plain"
    }

    fn sweep(&self, model: &SymbolicModel, q: &StateSet, _prev: Option<&StateSet>) -> Result<StateSet, SynthesisError> {
        Ok(pre(model, q))
    }
}

pub struct IncrementalPre;

impl Predecessor for IncrementalPre {
    fn name(&self) -> &str {
        "incremental"
    }

    fn sweep(&self, model: &SymbolicModel, q: &StateSet, prev: Option<&StateSet>) -> Result<StateSet, SynthesisError> {
        match prev {
            Some(p) => pre_incremental(model, q, p).map(|r| r.0),
            None => Ok(pre(model, q)),
        }
    }
}

pub struct PredecessorRegistry {
    entries: BTreeMap<String, Arc<dyn Predecessor>>,
}

impl PredecessorRegistry {
    pub fn empty() -> Self {
        PredecessorRegistry { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, p: Arc<dyn Predecessor>) {
        self.entries.insert(p.name().to_string(), p);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Predecessor>, SynthesisError> {
        self.entries.get(name).cloned().ok_or_else(|| SynthesisError::UnknownStrategy(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

impl Default for PredecessorRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(PlainPre));
        r.register(Arc::new(IncrementalPre));
        r
    }
}

/// Iterates `Q_0 ⊇ Q_1 ⊇ … ⊇ Q_fix`. The last set is the fixed point and
/// appears once.
#[derive(Debug, Clone, PartialEq)]
pub struct GameTrace {
    pub sets: Vec<StateSet>,
    pub iteration_ms: Vec<f64>,
}

impl GameTrace {
    pub fn fixed_point(&self) -> &StateSet {
        self.sets.last().expect("trace has at least Q_0")
    }

    /// `Q_ℓ`, or the fixed point when the trace is shorter.
    pub fn level(&self, l: usize) -> &StateSet {
        &self.sets[l.min(self.sets.len() - 1)]
    }
}

/// Winning set and the admissible inputs at each winning state.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyController {
    pub state_lattice: Lattice,
    pub input_lattice: Lattice,
    pub eps: f64,
    pub winning: StateSet,
    /// Sorted input ids per state; empty outside the winning set.
    pub admissible: Vec<Vec<u32>>,
}

impl SafetyController {
    pub fn extract(model: &SymbolicModel, winning: StateSet) -> Self {
        let admissible: Vec<Vec<u32>> = (0..model.n_states())
            .into_par_iter()
            .map(|s| {
                if !winning.contains(s) {
                    return Vec::new();
                }
                model
                    .enabled_inputs(s)
                    .filter(|&u| box_members(&model.table.get(s, u).unwrap(), &model.state_lattice, &winning))
                    .map(|u| u as u32)
                    .collect()
            })
            .collect();
        SafetyController {
            state_lattice: model.state_lattice.clone(),
            input_lattice: model.input_lattice.clone(),
            eps: model.eps,
            winning,
            admissible,
        }
    }

    /// Input ids admissible at continuous state `x`: the union over winning
    /// lattice points within `ε` of `x`.
    pub fn refine_at(&self, x: &[f64]) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for s in self.state_lattice.ball_ids(x, self.eps) {
            if self.winning.contains(s) {
                out.extend(self.admissible[s].iter().map(|&u| u as usize));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        self.state_lattice.ball_ids(x, self.eps).into_iter().any(|s| self.winning.contains(s))
    }

    pub fn input_point(&self, u: usize) -> Vec<f64> {
        self.input_lattice.point_of(u)
    }
}

/// Greatest fixed point of `pre` below `q0`. With `prev`, sweep `ℓ` is seeded
/// with the previous batch's `Q_{ℓ+1}`.
pub fn safety_game(
    model: &SymbolicModel,
    q0: &StateSet,
    pred: &dyn Predecessor,
    prev: Option<&GameTrace>,
) -> Result<(SafetyController, GameTrace), SynthesisError> {
    let cap = q0.count() + 1;
    let mut sets = vec![q0.clone()];
    let mut iteration_ms = Vec::new();
    loop {
        let l = sets.len() - 1;
        assert!(l <= cap, "safety game exceeded {cap} iterations");
        let t = Instant::now();
        let seed = prev.map(|p| p.level(l + 1));
        let next = pred.sweep(model, &sets[l], seed)?;
        iteration_ms.push(t.elapsed().as_secs_f64() * 1e3);
        if next == sets[l] {
            break;
        }
        sets.push(next);
    }
    let winning = sets.last().unwrap().clone();
    Ok((SafetyController::extract(model, winning), GameTrace { sets, iteration_ms }))
}
