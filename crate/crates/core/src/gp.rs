//! Gaussian-process regression with deterministic error bounds.
//!
//! Each state dimension `i` of the unknown drift `d` gets its own
//! [`GpPosterior`]. Confidence intervals `μ ± β·σ` are intersected batch by
//! batch in an [`IntervalCache`] kept at lattice states.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tsys::Lattice;

/// First jitter level, relative to the kernel's diagonal.
pub const JITTER_START: f64 = 1e-10;
/// Last jitter level before giving up.
pub const JITTER_MAX: f64 = 1e-4;
/// Negative posterior variance beyond this (relative) is an error, not round-off.
pub const NEG_VAR_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("kernel matrix is not positive definite even with jitter {jitter:e}")]
    FactorizationFailure { jitter: f64 },
    #[error("beta radicand {radicand} < 0 in dimension {dim}: RKHS bound too small for the data")]
    BoundViolation { dim: usize, radicand: f64 },
    #[error("empty intersection at state {state}, dimension {dim}: [{lo}, {hi}]")]
    EmptyIntersection { state: usize, dim: usize, lo: f64, hi: f64 },
    #[error("posterior variance {var} is negative beyond round-off")]
    NegativeVariance { var: f64 },
    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),
    #[error("invalid kernel parameters: {0}")]
    InvalidKernel(String),
    #[error("dataset shape mismatch: {0}")]
    Shape(String),
}

/// Positive-definite kernel on the state space.
pub trait Kernel: Send + Sync + Debug {
    fn name(&self) -> &str;
    fn eval(&self, x: &[f64], y: &[f64]) -> f64;
    /// `sup_x k(x, x)`.
    fn sup_diag(&self) -> f64;
    /// `sup ‖∂k(x, y)/∂x‖_∞` over all `x, y`.
    fn sup_grad(&self) -> f64;
}

/// Squared-exponential kernel `α²·exp(−½ Σ (x_j − y_j)²/λ_j²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeKernel {
    pub alpha: f64,
    pub lambda: Vec<f64>,
}

impl SeKernel {
    pub fn new(alpha: f64, lambda: Vec<f64>) -> Result<Self, GpError> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(GpError::InvalidKernel(format!("alpha must be >= 0, got {alpha}")));
        }
        if lambda.is_empty() || lambda.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(GpError::InvalidKernel(format!("length scales must be positive, got {lambda:?}")));
        }
        Ok(SeKernel { alpha, lambda })
    }
}

impl Kernel for SeKernel {
    fn name(&self) -> &str {
        "se"
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(y)
            .zip(&self.lambda)
            .map(|((a, b), l)| {
                let d = (a - b) / l;
                d * d
            })
            .sum();
        self.alpha * self.alpha * (-0.5 * r2).exp()
    }

    fn sup_diag(&self) -> f64 {
        self.alpha * self.alpha
    }

    fn sup_grad(&self) -> f64 {
        let lmin = self.lambda.iter().copied().fold(f64::INFINITY, f64::min);
        self.alpha * self.alpha * (-0.5f64).exp() / lmin
    }
}

/// Kernel hyperparameters as they appear in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(default = "default_kernel_name")]
    pub name: String,
    pub alpha: f64,
    pub lambda: Vec<f64>,
}

fn default_kernel_name() -> String {
    "se".into()
}

pub type KernelFactory = fn(&KernelSpec) -> Result<Arc<dyn Kernel>, GpError>;

/// Name → constructor table for kernels.
pub struct KernelRegistry {
    entries: BTreeMap<String, KernelFactory>,
}

impl KernelRegistry {
    pub fn empty() -> Self {
        KernelRegistry { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, name: &str, factory: KernelFactory) {
        self.entries.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn build(&self, spec: &KernelSpec) -> Result<Arc<dyn Kernel>, GpError> {
        let f = self.entries.get(&spec.name).ok_or_else(|| GpError::UnknownKernel(spec.name.clone()))?;
        f(spec)
    }
}

impl Default for KernelRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("se", |s| Ok(Arc::new(SeKernel::new(s.alpha, s.lambda.clone())?)));
        r
    }
}

/// A finite kernel expansion `Σ c_n k(·, x_n)`, whose RKHS norm is exact.
#[derive(Debug, Clone)]
pub struct RkhsFunction {
    pub kernel: Arc<dyn Kernel>,
    pub centers: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
}

impl RkhsFunction {
    pub fn new(kernel: Arc<dyn Kernel>, centers: Vec<Vec<f64>>, coeffs: Vec<f64>) -> Self {
        assert_eq!(centers.len(), coeffs.len());
        RkhsFunction { kernel, centers, coeffs }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.centers.iter().zip(&self.coeffs).map(|(c, a)| a * self.kernel.eval(c, x)).sum()
    }

    /// `√(cᵀ G c)` with `G` the Gram matrix of the centers.
    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for (ci, ai) in self.centers.iter().zip(&self.coeffs) {
            for (cj, aj) in self.centers.iter().zip(&self.coeffs) {
                s += ai * aj * self.kernel.eval(ci, cj);
            }
        }
        s.max(0.0).sqrt()
    }
}

/// Training data: state inputs and one output column per dimension.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(out_dims: usize) -> Self {
        Dataset { inputs: Vec::new(), outputs: vec![Vec::new(); out_dims] }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn push(&mut self, x: &[f64], y: &[f64]) {
        assert_eq!(y.len(), self.outputs.len(), "output dimension mismatch");
        self.inputs.push(x.to_vec());
        for (col, v) in self.outputs.iter_mut().zip(y) {
            col.push(*v);
        }
    }
}

/// Per-dimension RKHS norm bounds `B_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RkhsBound {
    pub b: Vec<f64>,
}

/// Posterior of one output dimension.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    kernel: Arc<dyn Kernel>,
    noise_var: f64,
    inputs: Vec<Vec<f64>>,
    /// Lower Cholesky factor of `K + (σ² + jitter)·I`, row-major.
    chol: DMatrix<f64>,
    weights: DVector<f64>,
    quad: f64,
    jitter: f64,
}

impl GpPosterior {
    pub fn fit(kernel: Arc<dyn Kernel>, noise_var: f64, inputs: &[Vec<f64>], y: &[f64]) -> Result<Self, GpError> {
        if inputs.len() != y.len() {
            return Err(GpError::Shape(format!("{} inputs vs {} outputs", inputs.len(), y.len())));
        }
        let t = inputs.len();
        let mut k = DMatrix::<f64>::zeros(t, t);
        for i in 0..t {
            for j in 0..=i {
                let v = kernel.eval(&inputs[i], &inputs[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
            k[(i, i)] += noise_var;
        }
        let scale = kernel.sup_diag().max(f64::MIN_POSITIVE);
        let mut jitter = 0.0;
        let chol = loop {
            let mut m = k.clone();
            for i in 0..t {
                m[(i, i)] += jitter;
            }
            if let Some(c) = m.cholesky() {
                break c;
            }
            jitter = if jitter == 0.0 { JITTER_START * scale } else { jitter * 10.0 };
            if jitter > JITTER_MAX * scale * (1.0 + 1e-12) {
                return Err(GpError::FactorizationFailure { jitter: jitter / 10.0 });
            }
        };
        let yv = DVector::from_column_slice(y);
        let weights = chol.solve(&yv);
        let quad = yv.dot(&weights);
        Ok(GpPosterior {
            kernel,
            noise_var,
            inputs: inputs.to_vec(),
            chol: chol.unpack(),
            weights,
            quad,
            jitter,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn kernel(&self) -> &Arc<dyn Kernel> {
        &self.kernel
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Jitter that had to be added to the diagonal, 0 when none.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `Yᵀ (K + σ²I)⁻¹ Y`.
    pub fn quad_form(&self) -> f64 {
        self.quad
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// Posterior mean and variance at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64), GpError> {
        let prior = self.kernel.eval(x, x);
        let t = self.inputs.len();
        if t == 0 {
            return Ok((0.0, prior));
        }
        let kstar: Vec<f64> = self.inputs.iter().map(|xi| self.kernel.eval(xi, x)).collect();
        let mu: f64 = kstar.iter().zip(self.weights.iter()).map(|(a, b)| a * b).sum();
        // forward substitution L v = k*
        let mut v = kstar;
        for i in 0..t {
            let mut s = v[i];
            for j in 0..i {
                s -= self.chol[(i, j)] * v[j];
            }
            v[i] = s / self.chol[(i, i)];
        }
        let var = prior - v.iter().map(|a| a * a).sum::<f64>();
        if var < -NEG_VAR_TOL * self.kernel.sup_diag() {
            return Err(GpError::NegativeVariance { var });
        }
        Ok((mu, var.clamp(0.0, prior)))
    }

    /// `β = √(B² − YᵀK⁻¹Y + T)`.
    pub fn beta(&self, b: f64, dim: usize) -> Result<f64, GpError> {
        let radicand = b * b - self.quad + self.inputs.len() as f64;
        if radicand < 0.0 {
            return Err(GpError::BoundViolation { dim, radicand });
        }
        Ok(radicand.sqrt())
    }

    pub fn conf_interval(&self, x: &[f64], beta: f64) -> Result<(f64, f64), GpError> {
        let (mu, var) = self.predict(x)?;
        let w = beta * var.sqrt();
        Ok((mu - w, mu + w))
    }
}

/// One posterior and one `β` per output dimension.
#[derive(Debug, Clone)]
pub struct GpModel {
    pub dims: Vec<GpPosterior>,
    pub betas: Vec<f64>,
}

impl GpModel {
    pub fn fit(
        kernels: &[Arc<dyn Kernel>],
        noise_sd: &[f64],
        bound: &RkhsBound,
        data: &Dataset,
    ) -> Result<Self, GpError> {
        let n = kernels.len();
        if data.outputs.len() != n || noise_sd.len() != n || bound.b.len() != n {
            return Err(GpError::Shape("kernel, noise, bound and output counts differ".into()));
        }
        let dims = (0..n)
            .into_par_iter()
            .map(|i| GpPosterior::fit(kernels[i].clone(), noise_sd[i] * noise_sd[i], &data.inputs, &data.outputs[i]))
            .collect::<Result<Vec<_>, _>>()?;
        let betas = dims.iter().enumerate().map(|(i, g)| g.beta(bound.b[i], i)).collect::<Result<Vec<_>, _>>()?;
        Ok(GpModel { dims, betas })
    }

    pub fn out_dims(&self) -> usize {
        self.dims.len()
    }

    pub fn total_variance(&self, x: &[f64]) -> Result<f64, GpError> {
        self.dims.iter().map(|g| g.predict(x).map(|p| p.1)).sum()
    }
}

/// Running intersections `r̄_i`, `r̲_i` at every lattice state.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCache {
    dims: usize,
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl IntervalCache {
    /// Cache whose entries start at `±bounds[i]`.
    pub fn new(states: usize, bounds: &[f64]) -> Self {
        let dims = bounds.len();
        let mut hi = Vec::with_capacity(states * dims);
        let mut lo = Vec::with_capacity(states * dims);
        for _ in 0..states {
            for &b in bounds {
                hi.push(b);
                lo.push(-b);
            }
        }
        IntervalCache { dims, hi, lo }
    }

    pub fn unbounded(states: usize, dims: usize) -> Self {
        Self::new(states, &vec![f64::INFINITY; dims])
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn states(&self) -> usize {
        if self.dims == 0 {
            0
        } else {
            self.hi.len() / self.dims
        }
    }

    pub fn get(&self, state: usize, dim: usize) -> (f64, f64) {
        let k = state * self.dims + dim;
        (self.lo[k], self.hi[k])
    }

    pub fn refine(&mut self, state: usize, dim: usize, interval: (f64, f64)) -> Result<(f64, f64), GpError> {
        let k = state * self.dims + dim;
        let lo = self.lo[k].max(interval.0);
        let hi = self.hi[k].min(interval.1);
        if lo > hi {
            return Err(GpError::EmptyIntersection { state, dim, lo, hi });
        }
        self.lo[k] = lo;
        self.hi[k] = hi;
        Ok((lo, hi))
    }

    /// `(d̂, Δ)` with `d̂ = (r̄ + r̲)/2` and `Δ = (r̄ − r̲)/2`.
    pub fn center_radius(&self, state: usize, dim: usize) -> (f64, f64) {
        let (lo, hi) = self.get(state, dim);
        (0.5 * (hi + lo), 0.5 * (hi - lo))
    }

    /// Intersects every lattice state with the model's confidence intervals
    /// and returns the posterior variances, `states × dims` row-major.
    pub fn refresh(&mut self, lattice: &Lattice, model: &GpModel) -> Result<Vec<f64>, GpError> {
        let n = self.dims;
        let per_state: Vec<Vec<(f64, f64, f64)>> = (0..lattice.len())
            .into_par_iter()
            .map(|id| {
                let x = lattice.point_of(id);
                (0..n)
                    .map(|i| {
                        let (mu, var) = model.dims[i].predict(&x)?;
                        let w = model.betas[i] * var.sqrt();
                        Ok((mu - w, mu + w, var))
                    })
                    .collect::<Result<Vec<_>, GpError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut vars = Vec::with_capacity(lattice.len() * n);
        for (id, row) in per_state.into_iter().enumerate() {
            for (i, (lo, hi, var)) in row.into_iter().enumerate() {
                self.refine(id, i, (lo, hi))?;
                vars.push(var);
            }
        }
        Ok(vars)
    }
}

/// Hölder constant `L_i = B_i·√(2·sup‖∂k/∂x‖_∞)`.
pub fn continuity_constant(kernel: &dyn Kernel, b: f64) -> f64 {
    b * (2.0 * kernel.sup_grad()).sqrt()
}

/// `sup |d_i| ≤ √(sup k(x,x))·B_i`.
pub fn global_bound(kernel: &dyn Kernel, b: f64) -> f64 {
    kernel.sup_diag().sqrt() * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn se(alpha: f64, lambda: &[f64]) -> Arc<dyn Kernel> {
        Arc::new(SeKernel::new(alpha, lambda.to_vec()).unwrap())
    }

    #[test]
    fn kernel_values() {
        let k = se(1.3, &[0.7, 2.0]);
        assert_eq!(k.eval(&[0.4, -1.0], &[0.4, -1.0]), 1.3 * 1.3);
        let k1 = se(1.0, &[1.0]);
        let v = k1.eval(&[0.0], &[2f64.sqrt()]);
        assert!((v - (-1f64).exp()).abs() < 1e-12);
        assert!((v - 0.36788).abs() < 1e-5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let y = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            assert_eq!(k.eval(&x, &y), k.eval(&y, &x));
            let v = k.eval(&x, &y);
            assert!(v > 0.0 && v <= 1.3 * 1.3);
        }
    }

    #[test]
    fn empty_dataset_gives_prior() {
        let g = GpPosterior::fit(se(0.8, &[1.0]), 0.01, &[], &[]).unwrap();
        let (mu, var) = g.predict(&[3.0]).unwrap();
        assert_eq!(mu, 0.0);
        assert!((var - 0.64).abs() < 1e-15);
        assert_eq!(g.beta(2.5, 0).unwrap(), 2.5);
        let (lo, hi) = g.conf_interval(&[0.0], 2.5).unwrap();
        assert!((lo + 2.5 * 0.8).abs() < 1e-12 && (hi - 2.5 * 0.8).abs() < 1e-12);
    }

    #[test]
    fn single_point_closed_form() {
        let (a2, s2, y) = (1.7f64, 0.09f64, 0.6f64);
        let g = GpPosterior::fit(se(a2.sqrt(), &[0.5]), s2, &[vec![1.0]], &[y]).unwrap();
        let (mu, var) = g.predict(&[1.0]).unwrap();
        assert!((mu - a2 * y / (a2 + s2)).abs() < 1e-12);
        assert!((var - a2 * s2 / (a2 + s2)).abs() < 1e-12);
        let g0 = GpPosterior::fit(se(1.0, &[1.0]), 0.01, &[vec![0.0]], &[0.0]).unwrap();
        assert!((g0.beta(1.5, 0).unwrap() - (1.5f64 * 1.5 + 1.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn far_from_data_reverts_to_prior() {
        let g = GpPosterior::fit(se(0.9, &[0.3]), 0.01, &[vec![0.0], vec![0.2]], &[1.0, -0.5]).unwrap();
        let (mu, var) = g.predict(&[50.0]).unwrap();
        assert!(mu.abs() < 1e-6);
        assert!((var - 0.81).abs() < 1e-6);
    }

    #[test]
    fn beta_two_points_matches_dense_inverse() {
        let k = se(1.2, &[0.8]);
        let xs = vec![vec![0.1], vec![0.9]];
        let y = [0.4, -0.3];
        let s2 = 0.04;
        let g = GpPosterior::fit(k.clone(), s2, &xs, &y).unwrap();
        let a = k.eval(&xs[0], &xs[0]) + s2;
        let b = k.eval(&xs[0], &xs[1]);
        let d = k.eval(&xs[1], &xs[1]) + s2;
        let det = a * d - b * b;
        let q = (d * y[0] * y[0] - 2.0 * b * y[0] * y[1] + a * y[1] * y[1]) / det;
        let bb = 1.1;
        let expected = (bb * bb - q + 2.0).sqrt();
        assert!((g.beta(bb, 0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn beta_negative_radicand_is_reported() {
        let g = GpPosterior::fit(se(1.0, &[1.0]), 1e-6, &[vec![0.0]], &[10.0]).unwrap();
        assert!(matches!(g.beta(1.0, 2), Err(GpError::BoundViolation { dim: 2, .. })));
    }

    #[test]
    fn duplicate_inputs_trigger_jitter() {
        let xs = vec![vec![0.5]; 4];
        let g = GpPosterior::fit(se(1.0, &[1.0]), 0.0, &xs, &[0.1; 4]).unwrap();
        assert!(g.jitter() > 0.0 && g.jitter() <= JITTER_MAX);
        let (_, var) = g.predict(&[0.5]).unwrap();
        assert!(var >= 0.0);
    }

    #[test]
    fn interval_cache_refine_and_center() {
        let mut c = IntervalCache::unbounded(3, 1);
        assert_eq!(c.refine(1, 0, (-1.0, 2.0)).unwrap(), (-1.0, 2.0));
        assert_eq!(c.refine(1, 0, (0.0, 3.0)).unwrap(), (0.0, 2.0));
        assert!(matches!(c.refine(1, 0, (2.5, 3.0)), Err(GpError::EmptyIntersection { state: 1, .. })));
        assert_eq!(c.get(1, 0), (0.0, 2.0));

        let mut c = IntervalCache::unbounded(1, 1);
        c.refine(0, 0, (-1.0, 3.0)).unwrap();
        assert_eq!(c.center_radius(0, 0), (1.0, 2.0));
        let mut c = IntervalCache::unbounded(1, 1);
        c.refine(0, 0, (0.7, 0.7)).unwrap();
        assert_eq!(c.center_radius(0, 0), (0.7, 0.0));
    }

    #[test]
    fn continuity_constant_values() {
        let k = SeKernel::new(1.0, vec![1.0, 1.0]).unwrap();
        let l = continuity_constant(&k, 1.0);
        assert!((l - (2.0 * (-0.5f64).exp()).sqrt()).abs() < 1e-12);
        assert!((l - 1.1014).abs() < 1e-4);
        assert!((continuity_constant(&k, 2.0) - 2.0 * l).abs() < 1e-12);
        let k2 = SeKernel::new(1.0, vec![2.0, 2.0]).unwrap();
        assert!((continuity_constant(&k2, 1.0) - l / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sup_gradient_matches_grid_search() {
        for lam in [0.5, 1.0, 2.0] {
            let k = SeKernel::new(1.4, vec![lam, 3.0 * lam]).unwrap();
            let mut best: f64 = 0.0;
            let h = 1e-6;
            for i in 0..=400 {
                for j in 0..=40 {
                    let x = [-4.0 * lam + 8.0 * lam * i as f64 / 400.0, -6.0 * lam + 12.0 * lam * j as f64 / 40.0];
                    let y = [0.0, 0.0];
                    let f = k.eval(&x, &y);
                    let g0 = (k.eval(&[x[0] + h, x[1]], &y) - f) / h;
                    let g1 = (k.eval(&[x[0], x[1] + h], &y) - f) / h;
                    best = best.max(g0.abs()).max(g1.abs());
                }
            }
            assert!((best - k.sup_grad()).abs() / k.sup_grad() < 1e-3, "lam {lam}: {best} vs {}", k.sup_grad());
        }
    }

    #[test]
    fn global_bound_values() {
        let k = SeKernel::new(1.0, vec![1.0]).unwrap();
        assert_eq!(global_bound(&k, 2.0), 2.0);
        let k0 = SeKernel::new(0.0, vec![1.0]).unwrap();
        assert_eq!(global_bound(&k0, 2.0), 0.0);
    }

    #[test]
    fn registry_builds_se_and_rejects_unknown() {
        let r = KernelRegistry::default();
        assert_eq!(r.names(), vec!["se"]);
        let k = r.build(&KernelSpec { name: "se".into(), alpha: 1.0, lambda: vec![1.0] }).unwrap();
        assert_eq!(k.name(), "se");
        assert!(matches!(
            r.build(&KernelSpec { name: "matern".into(), alpha: 1.0, lambda: vec![1.0] }),
            Err(GpError::UnknownKernel(_))
        ));
    }

    #[test]
    fn rkhs_norm_of_single_atom() {
        let k = se(0.7, &[1.0]);
        let f = RkhsFunction::new(k, vec![vec![0.0]], vec![2.0]);
        assert!((f.norm() - 2.0 * 0.7).abs() < 1e-12);
    }
}
