//! Lattices, state sets and safe-set geometry.
//!
//! A [`Lattice`] quantizes a box of ℝⁿ into the points `a·η` with integer
//! multi-index `a`, anchored at the origin. States are addressed either by
//! their multi-index ([`StateIndex`]) or by a dense row-major linear id
//! (`usize`), which is what the bitsets and transition tables use.

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

/// Relative slack used when converting real bounds to lattice indices.
pub const SNAP_TOL: f64 = 1e-9;

/// Absolute slack on safe-set faces so that lattice points computed as
/// `a as f64 * eta` are not rejected by round-off.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TsysError {
    #[error("point component {dim} = {value} is outside the lattice range")]
    OutOfRange { dim: usize, value: f64 },
    #[error("interior is empty in dimension {dim}")]
    EmptyInterior { dim: usize },
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Coords = SmallVec<[i64; 4]>;

/// Integer multi-index of a lattice point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateIndex(pub Coords);

impl StateIndex {
    pub fn new(idx: &[i64]) -> Self {
        StateIndex(idx.iter().copied().collect())
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    eta: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    first: Vec<i64>,
    counts: Vec<usize>,
    strides: Vec<usize>,
}

impl Lattice {
    /// Lattice of the points `a·eta` inside `[lower, upper]`.
    pub fn new(eta: f64, lower: &[f64], upper: &[f64]) -> Result<Self, TsysError> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(TsysError::InvalidLattice(format!("eta must be positive, got {eta}")));
        }
        if lower.is_empty() {
            return Err(TsysError::InvalidLattice("zero-dimensional lattice".into()));
        }
        if lower.len() != upper.len() {
            return Err(TsysError::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        let mut first = Vec::with_capacity(lower.len());
        let mut counts = Vec::with_capacity(lower.len());
        for (i, (&lo, &hi)) in lower.iter().zip(upper).enumerate() {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(TsysError::InvalidLattice(format!(
                    "dimension {i}: bounds [{lo}, {hi}] are not an interval"
                )));
            }
            let a_lo = (lo / eta - SNAP_TOL).ceil() as i64;
            let a_hi = (hi / eta + SNAP_TOL).floor() as i64;
            if a_hi < a_lo {
                return Err(TsysError::InvalidLattice(format!(
                    "dimension {i}: no multiple of {eta} inside [{lo}, {hi}]"
                )));
            }
            first.push(a_lo);
            counts.push((a_hi - a_lo + 1) as usize);
        }
        let mut strides = vec![1usize; counts.len()];
        for i in (0..counts.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * counts[i + 1];
        }
        Ok(Lattice { eta, lower: lower.to_vec(), upper: upper.to_vec(), first, counts, strides })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Total number of lattice points.
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn first_index(&self, dim: usize) -> i64 {
        self.first[dim]
    }

    pub fn last_index(&self, dim: usize) -> i64 {
        self.first[dim] + self.counts[dim] as i64 - 1
    }

    pub fn contains_index(&self, idx: &StateIndex) -> bool {
        idx.0.len() == self.dim()
            && idx.0.iter().enumerate().all(|(i, &a)| a >= self.first[i] && a <= self.last_index(i))
    }

    pub fn id_of(&self, idx: &StateIndex) -> Option<usize> {
        if !self.contains_index(idx) {
            return None;
        }
        Some(self.id_of_unchecked(&idx.0))
    }

    pub(crate) fn id_of_unchecked(&self, idx: &[i64]) -> usize {
        idx.iter()
            .enumerate()
            .map(|(i, &a)| (a - self.first[i]) as usize * self.strides[i])
            .sum()
    }

    pub fn index_of(&self, id: usize) -> StateIndex {
        let mut rem = id;
        let mut out = Coords::with_capacity(self.dim());
        for i in 0..self.dim() {
            let q = rem / self.strides[i];
            rem %= self.strides[i];
            out.push(self.first[i] + q as i64);
        }
        StateIndex(out)
    }

    pub fn point(&self, idx: &StateIndex) -> Vec<f64> {
        idx.0.iter().map(|&a| a as f64 * self.eta).collect()
    }

    pub fn point_of(&self, id: usize) -> Vec<f64> {
        let mut buf = vec![0.0; self.dim()];
        self.point_into(id, &mut buf);
        buf
    }

    pub fn point_into(&self, id: usize, buf: &mut [f64]) {
        let mut rem = id;
        for i in 0..self.dim() {
            let q = rem / self.strides[i];
            rem %= self.strides[i];
            buf[i] = (self.first[i] + q as i64) as f64 * self.eta;
        }
    }

    /// Closest lattice point in the ∞-norm, ties rounded half-up per component.
    pub fn nearest(&self, x: &[f64]) -> Result<StateIndex, TsysError> {
        if x.len() != self.dim() {
            return Err(TsysError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let half = 0.5 * self.eta;
        let mut out = Coords::with_capacity(self.dim());
        for (i, &xi) in x.iter().enumerate() {
            let lo = self.first[i] as f64 * self.eta - half;
            let hi = self.last_index(i) as f64 * self.eta + half;
            let tol = SNAP_TOL * self.eta;
            if !(xi >= lo - tol && xi <= hi + tol) {
                return Err(TsysError::OutOfRange { dim: i, value: xi });
            }
            let a = (xi / self.eta + 0.5).floor() as i64;
            out.push(a.clamp(self.first[i], self.last_index(i)));
        }
        Ok(StateIndex(out))
    }

    /// Linear ids of all lattice points within ∞-distance `radius` of `x`.
    pub fn ball_ids(&self, x: &[f64], radius: f64) -> Vec<usize> {
        let mut lo = Coords::new();
        let mut hi = Coords::new();
        for (i, &xi) in x.iter().enumerate() {
            let a = ((xi - radius) / self.eta - SNAP_TOL).ceil() as i64;
            let b = ((xi + radius) / self.eta + SNAP_TOL).floor() as i64;
            let a = a.max(self.first[i]);
            let b = b.min(self.last_index(i));
            if a > b {
                return Vec::new();
            }
            lo.push(a);
            hi.push(b);
        }
        IndexBox { lo, hi }.ids(self)
    }
}

/// Axis-aligned product of integer index ranges. Empty when any `lo > hi`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexBox {
    pub lo: Coords,
    pub hi: Coords,
}

impl IndexBox {
    pub fn new(lo: &[i64], hi: &[i64]) -> Self {
        IndexBox { lo: lo.iter().copied().collect(), hi: hi.iter().copied().collect() }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    pub fn cardinality(&self) -> u64 {
        if self.is_empty() {
            return 0;
        }
        self.lo.iter().zip(&self.hi).map(|(l, h)| (h - l + 1) as u64).product()
    }

    pub fn contains(&self, idx: &StateIndex) -> bool {
        idx.0.len() == self.dim()
            && idx.0.iter().enumerate().all(|(i, &a)| a >= self.lo[i] && a <= self.hi[i])
    }

    /// Set inclusion; the empty box is a subset of everything.
    pub fn is_subset_of(&self, other: &IndexBox) -> bool {
        if self.is_empty() {
            return true;
        }
        if other.is_empty() {
            return false;
        }
        (0..self.dim()).all(|i| self.lo[i] >= other.lo[i] && self.hi[i] <= other.hi[i])
    }

    pub fn within(&self, lattice: &Lattice) -> bool {
        self.is_empty()
            || (0..self.dim())
                .all(|i| self.lo[i] >= lattice.first_index(i) && self.hi[i] <= lattice.last_index(i))
    }

    /// Visits member ids in row-major order until `f` returns false.
    /// Returns false iff the visit was cut short. The box must lie within
    /// the lattice.
    pub fn visit_ids(&self, lattice: &Lattice, mut f: impl FnMut(usize) -> bool) -> bool {
        if self.is_empty() {
            return true;
        }
        let n = self.dim();
        let mut cur: Coords = self.lo.clone();
        loop {
            if !f(lattice.id_of_unchecked(&cur)) {
                return false;
            }
            let mut k = n;
            loop {
                if k == 0 {
                    return true;
                }
                k -= 1;
                if cur[k] < self.hi[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = self.lo[k];
            }
        }
    }

    pub fn ids(&self, lattice: &Lattice) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.cardinality() as usize);
        self.visit_ids(lattice, |id| {
            out.push(id);
            true
        });
        out
    }
}

/// True iff every member of `ibox` is in `allowed`. Vacuously true for an
/// empty box; false if the box leaves the lattice.
pub fn box_members(ibox: &IndexBox, lattice: &Lattice, allowed: &StateSet) -> bool {
    if ibox.is_empty() {
        return true;
    }
    if !ibox.within(lattice) {
        return false;
    }
    ibox.visit_ids(lattice, |id| allowed.contains(id))
}

/// Membership bitset over the linear ids of one lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSet {
    bits: FixedBitSet,
}

impl StateSet {
    pub fn empty(universe: usize) -> Self {
        StateSet { bits: FixedBitSet::with_capacity(universe) }
    }

    pub fn full(universe: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe);
        bits.insert_range(..);
        StateSet { bits }
    }

    pub fn from_ids(universe: usize, ids: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(universe);
        for id in ids {
            s.insert(id);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn insert(&mut self, id: usize) {
        self.bits.insert(id);
    }

    pub fn remove(&mut self, id: usize) {
        self.bits.set(id, false);
    }

    pub fn contains(&self, id: usize) -> bool {
        self.bits.contains(id)
    }

    /// Number of members.
    pub fn count(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        StateSet { bits }
    }

    pub fn intersection(&self, other: &StateSet) -> StateSet {
        let mut bits = self.bits.clone();
        bits.intersect_with(&other.bits);
        StateSet { bits }
    }

    pub fn difference(&self, other: &StateSet) -> StateSet {
        let mut bits = self.bits.clone();
        bits.difference_with(&other.bits);
        StateSet { bits }
    }

    pub fn union_with(&mut self, other: &StateSet) {
        self.bits.union_with(&other.bits);
    }
}

/// Unsafe half-space `{x | a·x ≤ b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub a: Vec<f64>,
    pub b: f64,
}

impl HalfSpace {
    fn dot(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(x).map(|(a, x)| a * x).sum()
    }

    pub fn satisfied_by(&self, x: &[f64]) -> bool {
        self.dot(x) <= self.b + MEMBERSHIP_TOL
    }
}

/// A box minus a union of affine half-spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafeSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default)]
    pub exclusions: Vec<HalfSpace>,
}

impl SafeSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, exclusions: Vec<HalfSpace>) -> Result<Self, TsysError> {
        if lower.len() != upper.len() {
            return Err(TsysError::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        for (i, (l, h)) in lower.iter().zip(&upper).enumerate() {
            if !(l <= h) || !l.is_finite() || !h.is_finite() {
                return Err(TsysError::InvalidLattice(format!("safe box dimension {i} is [{l}, {h}]")));
            }
        }
        for ex in &exclusions {
            if ex.a.len() != lower.len() {
                return Err(TsysError::DimensionMismatch { expected: lower.len(), got: ex.a.len() });
            }
        }
        Ok(SafeSet { lower, upper, exclusions })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lower[i] - MEMBERSHIP_TOL && v <= self.upper[i] + MEMBERSHIP_TOL)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.in_box(x) && !self.exclusions.iter().any(|h| h.satisfied_by(x))
    }

    /// `Interior_eps` for the ∞-norm ball: faces move in by `eps`, and each
    /// exclusion grows by `eps·‖a‖₁`, the support of the ball along `a`.
    pub fn interior(&self, eps: f64) -> Result<SafeSet, TsysError> {
        assert!(eps >= 0.0, "interior radius must be non-negative");
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let (l, h) = (self.lower[i] + eps, self.upper[i] - eps);
            if l > h + MEMBERSHIP_TOL {
                return Err(TsysError::EmptyInterior { dim: i });
            }
            lower.push(l);
            upper.push(h.max(l));
        }
        let exclusions = self
            .exclusions
            .iter()
            .map(|h| HalfSpace { a: h.a.clone(), b: h.b + eps * h.a.iter().map(|v| v.abs()).sum::<f64>() })
            .collect();
        Ok(SafeSet { lower, upper, exclusions })
    }
}

/// Bitset of the lattice points that belong to `safe`.
pub fn lattice_points_of_set(lattice: &Lattice, safe: &SafeSet) -> StateSet {
    let mut set = StateSet::empty(lattice.len());
    let mut buf = vec![0.0; lattice.dim()];
    for id in 0..lattice.len() {
        lattice.point_into(id, &mut buf);
        if safe.contains(&buf) {
            set.insert(id);
        }
    }
    set
}
