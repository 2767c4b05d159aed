//! Target potentials `U(w) = f(w) + g(w)` with quadratic prior `g(w) = (m/2)‖w‖²`.
//!
//! The sampler only ever sees `f` through [`Potential`]; the prior enters as
//! the scalar `m`. Two families are provided: an isotropic quadratic `f`
//! (Gaussian posterior, used as an exact oracle) and an equal-weight,
//! unit-variance Gaussian mixture, whose `f` is non-convex.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::rng::{aux_stream, AuxTag};

/// Heuristic LSI constant for the mixture experiments. The true constant of a
/// mixture is not available in closed form.
pub const DEFAULT_MIXTURE_ALPHA: f64 = 0.1;

const POWER_ITERATIONS: usize = 50;
const POWER_TOL: f64 = 1e-10;

/// Constants that parameterize both step-size schedules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetConstants {
    /// Strong-convexity coefficient of the prior.
    pub m: f64,
    /// Uniform spectral bound on `∇²f`.
    pub l: f64,
    /// `Tr(H)` where `∇²f (∇²f)ᵀ ⪯ H`.
    pub tr_h: f64,
    /// `Tr(H^{1/2})`.
    pub tr_h_sqrt: f64,
    /// Log-Sobolev constant of the posterior.
    pub alpha_star: f64,
}

impl TargetConstants {
    /// Checks the constant invariants for ambient dimension `dim`. Error
    /// messages name the offending field as `constants.<field>`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let positive = [("m", self.m), ("alpha_star", self.alpha_star)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invariant(format!("constants.{name} must be > 0")));
            }
        }
        let non_negative = [("L", self.l), ("tr_h", self.tr_h), ("tr_h_sqrt", self.tr_h_sqrt)];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Invariant(format!("constants.{name} must be >= 0")));
            }
        }
        let d = dim as f64;
        let slack = |x: f64| 1e-9 * (1.0 + x.abs());
        if self.tr_h > self.l * self.l * d + slack(self.l * self.l * d) {
            return Err(Error::Invariant("constants.tr_h must be <= L^2 * d".into()));
        }
        if self.tr_h_sqrt > self.l * d + slack(self.l * d) {
            return Err(Error::Invariant("constants.tr_h_sqrt must be <= L * d".into()));
        }
        let sq = self.tr_h_sqrt * self.tr_h_sqrt;
        if self.tr_h > sq + slack(sq) {
            return Err(Error::Invariant("constants.tr_h must be <= tr_h_sqrt^2".into()));
        }
        Ok(())
    }
}

/// The likelihood part `f` of a posterior `p∗ ∝ exp(−f − (m/2)‖w‖²)`.
///
/// Implementations are immutable and shared across chains.
pub trait Potential: Sync {
    fn dim(&self) -> usize;

    /// Prior coefficient `m`.
    fn m(&self) -> f64;

    /// `f(w)`. `w` must have length [`Potential::dim`].
    fn value(&self, w: &[f64]) -> f64;

    /// Writes `∇f(w)` into `out`. Lengths are not checked; see [`grad_f`].
    fn grad_into(&self, w: &[f64], out: &mut [f64]);

    fn hessian(&self, _w: &[f64]) -> Result<DMatrix<f64>> {
        Err(Error::Unsupported("target has no second derivatives"))
    }

    fn constants(&self) -> TargetConstants;
}

/// `∇f(w)` with dimension and finiteness checks.
pub fn grad_f<P: Potential + ?Sized>(target: &P, w: &[f64]) -> Result<Vec<f64>> {
    ensure_dim(target.dim(), w.len())?;
    ensure_finite("w", w)?;
    let mut out = vec![0.0; w.len()];
    target.grad_into(w, &mut out);
    ensure_finite("grad_f", &out)?;
    Ok(out)
}

/// `∇²f(w)` as a dense symmetric matrix.
pub fn hessian_f<P: Potential + ?Sized>(target: &P, w: &[f64]) -> Result<DMatrix<f64>> {
    ensure_dim(target.dim(), w.len())?;
    ensure_finite("w", w)?;
    target.hessian(w)
}

/// `∇U(w) = ∇f(w) + m·w`.
pub fn grad_u<P: Potential + ?Sized>(target: &P, w: &[f64]) -> Result<Vec<f64>> {
    let mut g = grad_f(target, w)?;
    let m = target.m();
    for (gi, wi) in g.iter_mut().zip(w) {
        *gi += m * wi;
    }
    Ok(g)
}

/// `f(w) = (λ/2)‖w‖²`, so the posterior is `N(0, (m+λ)⁻¹ I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTarget {
    pub lambda: f64,
    pub dim: usize,
    pub m: f64,
    /// Defaults to the exact LSI constant `m + λ`; any smaller positive value
    /// is also a valid LSI constant.
    pub alpha_star: f64,
}

impl QuadraticTarget {
    pub fn new(lambda: f64, dim: usize, m: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Invariant("target.lambda must be >= 0".into()));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Invariant("constants.m must be > 0".into()));
        }
        if dim == 0 {
            return Err(Error::Invariant("target.dim must be >= 1".into()));
        }
        Ok(Self { lambda, dim, m, alpha_star: m + lambda })
    }

    pub fn with_alpha_star(mut self, alpha_star: f64) -> Result<Self> {
        if !(alpha_star > 0.0) {
            return Err(Error::Invariant("constants.alpha_star must be > 0".into()));
        }
        if alpha_star > self.m + self.lambda {
            return Err(Error::Invariant(
                "constants.alpha_star must not exceed m + lambda for a quadratic target".into(),
            ));
        }
        self.alpha_star = alpha_star;
        Ok(self)
    }

    /// Posterior variance per coordinate.
    pub fn target_var(&self) -> f64 {
        1.0 / (self.m + self.lambda)
    }
}

impl Potential for QuadraticTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn m(&self) -> f64 {
        self.m
    }

    fn value(&self, w: &[f64]) -> f64 {
        0.5 * self.lambda * w.iter().map(|x| x * x).sum::<f64>()
    }

    fn grad_into(&self, w: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(w) {
            *o = self.lambda * x;
        }
    }

    fn hessian(&self, _w: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.dim, self.dim) * self.lambda)
    }

    fn constants(&self) -> TargetConstants {
        let d = self.dim as f64;
        TargetConstants {
            m: self.m,
            l: self.lambda,
            tr_h: self.lambda * self.lambda * d,
            tr_h_sqrt: self.lambda * d,
            alpha_star: self.alpha_star,
        }
    }
}

/// `p∗(w) ∝ (1/K) Σᵢ exp(−‖w − μᵢ‖²/2)` split as
/// `f(w) = −ln[(1/K) Σᵢ exp(μᵢᵀw − ‖μᵢ‖²/2)]` and `g(w) = ‖w‖²/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixtureTarget {
    /// Row-major `K × d`.
    means: Vec<f64>,
    half_sq_norms: Vec<f64>,
    k: usize,
    dim: usize,
    r_mu: f64,
    alpha_star: f64,
    h_half: HHalf,
}

/// The explicit bound `H^{1/2} = Σ_{i<j} (μᵢ−μⱼ)(μᵢ−μⱼ)ᵀ` with `0 ⪯ −∇²f ⪯ H^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HHalf {
    pub matrix: DMatrix<f64>,
    /// `Tr(H^{1/2})`.
    pub trace: f64,
    /// `Tr(H) = Tr((H^{1/2})²)`.
    pub trace_h: f64,
    /// `λ_max(H^{1/2})`, by power iteration.
    pub lambda_max: f64,
}

impl GaussianMixtureTarget {
    /// `means` holds K rows of length `dim`.
    pub fn new(means: Vec<Vec<f64>>, alpha_star: f64) -> Result<Self> {
        let k = means.len();
        if k == 0 {
            return Err(Error::Invariant("target.means must contain at least one row".into()));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::Invariant("target.means rows must be non-empty".into()));
        }
        for row in &means {
            ensure_dim(dim, row.len())?;
            ensure_finite("target.means", row)?;
        }
        if !(alpha_star > 0.0 && alpha_star.is_finite()) {
            return Err(Error::Invariant("constants.alpha_star must be > 0".into()));
        }
        let half_sq_norms: Vec<f64> =
            means.iter().map(|r| 0.5 * r.iter().map(|x| x * x).sum::<f64>()).collect();
        let r_mu = half_sq_norms.iter().map(|h| (2.0 * h).sqrt()).fold(0.0, f64::max);
        let flat: Vec<f64> = means.into_iter().flatten().collect();
        let h_half = compute_h_half(&flat, k, dim);
        Ok(Self { means: flat, half_sq_norms, k, dim, r_mu, alpha_star, h_half })
    }

    pub fn n_components(&self) -> usize {
        self.k
    }

    pub fn mean(&self, i: usize) -> &[f64] {
        &self.means[i * self.dim..(i + 1) * self.dim]
    }

    pub fn means(&self) -> impl Iterator<Item = &[f64]> {
        self.means.chunks_exact(self.dim)
    }

    pub fn r_mu(&self) -> f64 {
        self.r_mu
    }

    pub fn alpha_star(&self) -> f64 {
        self.alpha_star
    }

    /// `16 K⁴ R_μ⁴`, the dimension-free upper bound on `Tr(H)`.
    pub fn trace_bound(&self) -> f64 {
        16.0 * (self.k as f64).powi(4) * self.r_mu.powi(4)
    }

    /// Coordinates in which every component mean is zero. There the posterior
    /// is exactly `N(0, 1)` and independent of the other coordinates.
    pub fn prior_only_coords(&self) -> Vec<usize> {
        (0..self.dim).filter(|&j| self.means().all(|mu| mu[j] == 0.0)).collect()
    }

    /// Softmax weights over the component logits `μᵢᵀw − ‖μᵢ‖²/2`, shifted by
    /// their maximum. Returns the log-sum-exp of the logits as well.
    fn responsibilities(&self, w: &[f64], weights: &mut [f64]) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for (i, z) in weights.iter_mut().enumerate() {
            *z = dot(self.mean(i), w) - self.half_sq_norms[i];
            max = max.max(*z);
        }
        let mut total = 0.0;
        for z in weights.iter_mut() {
            *z = (*z - max).exp();
            total += *z;
        }
        for z in weights.iter_mut() {
            *z /= total;
        }
        max + total.ln()
    }

    /// Draws one exact sample from the posterior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let i = rng.random_range(0..self.k);
        for (o, mu) in out.iter_mut().zip(self.mean(i)) {
            let z: f64 = rng.sample(StandardNormal);
            *o = mu + z;
        }
    }
}

/// `H^{1/2}` together with its traces and top eigenvalue.
pub fn h_half(target: &GaussianMixtureTarget) -> &HHalf {
    &target.h_half
}

fn compute_h_half(means: &[f64], k: usize, dim: usize) -> HHalf {
    let mut diffs: Vec<Vec<f64>> = Vec::with_capacity(k * (k.saturating_sub(1)) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let mi = &means[i * dim..(i + 1) * dim];
            let mj = &means[j * dim..(j + 1) * dim];
            diffs.push(mi.iter().zip(mj).map(|(a, b)| a - b).collect());
        }
    }
    let mut matrix = DMatrix::zeros(dim, dim);
    for delta in &diffs {
        let v = nalgebra::DVector::from_column_slice(delta);
        matrix.ger(1.0, &v, &v, 1.0);
    }
    let trace = diffs.iter().map(|d| dot(d, d)).sum();
    // Tr(M²) = Σ_{p,q} (δ_p·δ_q)² for M = Σ_p δ_p δ_pᵀ.
    let trace_h = diffs
        .iter()
        .flat_map(|a| diffs.iter().map(move |b| dot(a, b).powi(2)))
        .sum();
    let lambda_max = power_iteration(&diffs, dim);
    HHalf { matrix, trace, trace_h, lambda_max }
}

/// Largest eigenvalue of `Σ_p δ_p δ_pᵀ`, applied implicitly.
fn power_iteration(diffs: &[Vec<f64>], dim: usize) -> f64 {
    if diffs.iter().all(|d| d.iter().all(|&x| x == 0.0)) {
        return 0.0;
    }
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for d in diffs {
            let c = dot(d, v);
            for (o, x) in out.iter_mut().zip(d) {
                *o += c * x;
            }
        }
        out
    };
    // Start inside the range of the operator so the start vector cannot be
    // orthogonal to the top eigenvector.
    let mut v: Vec<f64> = vec![0.0; dim];
    let mut rng = aux_stream(0x6d69_7874, AuxTag::Validation);
    for d in diffs {
        let c: f64 = 1.0 + rng.random::<f64>();
        for (o, x) in v.iter_mut().zip(d) {
            *o += c * x;
        }
    }
    normalize(&mut v);
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let mut next = apply(&v);
        let rayleigh = dot(&v, &next);
        let norm = normalize(&mut next);
        if norm == 0.0 {
            break;
        }
        v = next;
        let converged = (rayleigh - estimate).abs() <= POWER_TOL * rayleigh.abs().max(1.0);
        estimate = rayleigh;
        if converged {
            break;
        }
    }
    estimate
}

impl Potential for GaussianMixtureTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn m(&self) -> f64 {
        1.0
    }

    fn value(&self, w: &[f64]) -> f64 {
        let mut weights = vec![0.0; self.k];
        let lse = self.responsibilities(w, &mut weights);
        -(lse - (self.k as f64).ln())
    }

    fn grad_into(&self, w: &[f64], out: &mut [f64]) {
        // ∇f = −Σᵢ sᵢ μᵢ with s = softmax(logits).
        let mut small = [0.0; 8];
        let mut heap;
        let weights: &mut [f64] = if self.k <= small.len() {
            &mut small[..self.k]
        } else {
            heap = vec![0.0; self.k];
            &mut heap
        };
        self.responsibilities(w, weights);
        out.fill(0.0);
        for (i, s) in weights.iter().enumerate() {
            for (o, mu) in out.iter_mut().zip(self.mean(i)) {
                *o -= s * mu;
            }
        }
    }

    fn hessian(&self, w: &[f64]) -> Result<DMatrix<f64>> {
        // ∇²f = (Σ sᵢμᵢ)(Σ sⱼμⱼ)ᵀ − Σ sᵢ μᵢμᵢᵀ.
        let mut weights = vec![0.0; self.k];
        self.responsibilities(w, &mut weights);
        let mut avg = nalgebra::DVector::zeros(self.dim);
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for (i, &s) in weights.iter().enumerate() {
            let mu = nalgebra::DVector::from_column_slice(self.mean(i));
            avg.axpy(s, &mu, 1.0);
            h.ger(-s, &mu, &mu, 1.0);
        }
        h.ger(1.0, &avg, &avg, 1.0);
        // Rank-one updates are symmetric only up to rounding.
        let sym = (&h + h.transpose()) * 0.5;
        Ok(sym)
    }

    fn constants(&self) -> TargetConstants {
        TargetConstants {
            m: 1.0,
            l: self.h_half.lambda_max,
            tr_h: self.h_half.trace_h,
            tr_h_sqrt: self.h_half.trace,
            alpha_star: self.alpha_star,
        }
    }
}

/// Closed set of targets constructible from a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetModel {
    Quadratic(QuadraticTarget),
    Mixture(GaussianMixtureTarget),
}

impl TargetModel {
    /// Coordinates whose posterior marginal is the prior `N(0, 1/m)` and
    /// which evolve independently of all other coordinates.
    pub fn prior_only_coords(&self) -> Vec<usize> {
        match self {
            TargetModel::Quadratic(q) if q.lambda == 0.0 => (0..q.dim).collect(),
            TargetModel::Quadratic(_) => Vec::new(),
            TargetModel::Mixture(mix) => mix.prior_only_coords(),
        }
    }

    /// Draws one exact posterior sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            TargetModel::Quadratic(q) => {
                let sd = q.target_var().sqrt();
                for o in out.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *o = sd * z;
                }
            }
            TargetModel::Mixture(mix) => mix.sample(rng, out),
        }
    }
}

impl Potential for TargetModel {
    fn dim(&self) -> usize {
        match self {
            TargetModel::Quadratic(t) => t.dim(),
            TargetModel::Mixture(t) => t.dim(),
        }
    }

    fn m(&self) -> f64 {
        match self {
            TargetModel::Quadratic(t) => t.m(),
            TargetModel::Mixture(t) => t.m(),
        }
    }

    fn value(&self, w: &[f64]) -> f64 {
        match self {
            TargetModel::Quadratic(t) => t.value(w),
            TargetModel::Mixture(t) => t.value(w),
        }
    }

    fn grad_into(&self, w: &[f64], out: &mut [f64]) {
        match self {
            TargetModel::Quadratic(t) => t.grad_into(w, out),
            TargetModel::Mixture(t) => t.grad_into(w, out),
        }
    }

    fn hessian(&self, w: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            TargetModel::Quadratic(t) => t.hessian(w),
            TargetModel::Mixture(t) => t.hessian(w),
        }
    }

    fn constants(&self) -> TargetConstants {
        match self {
            TargetModel::Quadratic(t) => t.constants(),
            TargetModel::Mixture(t) => t.constants(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}
