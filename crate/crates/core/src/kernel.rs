//! Closed-form one-step law of the prior-diffusion Langevin update.
//!
//! Conditioned on the previous particle `w₀`, stage 1 followed by the exact
//! OU stage is Gaussian:
//!
//! ```text
//! w | w₀ ~ N( (w₀ − η̃∇f(w₀)) e^{−mη},  (1 − e^{−2mη})/m · I )
//! ```
//!
//! The same law is the time-`η` marginal of the affine SDE
//! `dŵ = −(mŵ + c∇f(w₀)) dt + √2 dB` with `c = mη̃/(e^{mη} − 1)`, which
//! [`InterpolatingSde::em_simulate`] integrates numerically for cross-checks.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{ensure_dim, Error, Result};
use crate::rng::chain_stream;
use crate::sampler::{coupled_eta_tilde, ou_coefficients};
use crate::targets::{grad_f, Potential};

/// Gaussian transition `p(w | w₀)` for one step with diffusion time `eta` and
/// gradient step `eta_tilde`.
#[derive(Debug, Clone, Copy)]
pub struct TransitionKernel<'a, P: ?Sized> {
    target: &'a P,
    m: f64,
    eta: f64,
    eta_tilde: f64,
    decay: f64,
    var: f64,
}

impl<'a, P: Potential + ?Sized> TransitionKernel<'a, P> {
    /// Kernel with the coupled gradient step `η̃ = (e^{mη} − 1)/m`.
    pub fn new(target: &'a P, eta: f64) -> Result<Self> {
        Self::with_eta_tilde(target, eta, coupled_eta_tilde(eta, target.m()))
    }

    /// Kernel with an arbitrary gradient step (the SDE anchor coefficient is
    /// then no longer 1).
    pub fn with_eta_tilde(target: &'a P, eta: f64, eta_tilde: f64) -> Result<Self> {
        let m = target.m();
        let (decay, sd) = ou_coefficients(m, eta)?;
        if !(eta_tilde >= 0.0 && eta_tilde.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta_tilde must be >= 0, got {eta_tilde}")));
        }
        Ok(Self { target, m, eta, eta_tilde, decay, var: sd * sd })
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn eta_tilde(&self) -> f64 {
        self.eta_tilde
    }

    /// Isotropic variance `(1 − e^{−2mη})/m`.
    pub fn var_scalar(&self) -> f64 {
        self.var
    }

    /// `(w₀ − η̃∇f(w₀)) e^{−mη}`.
    pub fn mean_map(&self, w0: &[f64]) -> Result<Vec<f64>> {
        let g = grad_f(self.target, w0)?;
        Ok(w0.iter().zip(&g).map(|(w, g)| (w - self.eta_tilde * g) * self.decay).collect())
    }

    /// Mean of the interpolating SDE at time `t ∈ [0, η]`:
    /// `e^{−mt} w₀ − c (1 − e^{−mt})/m ∇f(w₀)`.
    pub fn kernel_mean(&self, w0: &[f64], t: f64) -> Result<Vec<f64>> {
        if !(0.0..=self.eta).contains(&t) {
            return Err(Error::InvalidArgument(format!("t = {t} outside [0, {}]", self.eta)));
        }
        let sde = self.sde(w0)?;
        Ok(sde.mean(w0, t))
    }

    /// `log p(w | w₀)`.
    pub fn transition_log_density(&self, w: &[f64], w0: &[f64]) -> Result<f64> {
        ensure_dim(self.dim(), w.len())?;
        let mean = self.mean_map(w0)?;
        let sq: f64 = w.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum();
        let d = self.dim() as f64;
        Ok(-0.5 * d * (2.0 * std::f64::consts::PI * self.var).ln() - sq / (2.0 * self.var))
    }

    /// `mean_map(w₀) + √var · ξ` for a given standard-normal vector `ξ`.
    pub fn sample_with_noise(&self, w0: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim(), xi.len())?;
        let sd = self.var.sqrt();
        let mut out = self.mean_map(w0)?;
        out.iter_mut().zip(xi).for_each(|(o, z)| *o += sd * z);
        Ok(out)
    }

    /// One exact draw of the two-stage update from `w₀`.
    pub fn kernel_sample<R: Rng + ?Sized>(&self, w0: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let xi: Vec<f64> = (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect();
        self.sample_with_noise(w0, &xi)
    }

    /// The affine SDE whose time-`η` marginal is this kernel.
    pub fn sde(&self, w0: &[f64]) -> Result<InterpolatingSde> {
        Ok(InterpolatingSde {
            m: self.m,
            eta: self.eta,
            eta_tilde: self.eta_tilde,
            anchor_gradient: grad_f(self.target, w0)?,
        })
    }
}

/// `dŵ = −(m ŵ + c ∇f(w₀)) dt + √2 dB` on `[0, η]`, with `∇f(w₀)` frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatingSde {
    pub m: f64,
    pub eta: f64,
    pub eta_tilde: f64,
    pub anchor_gradient: Vec<f64>,
}

impl InterpolatingSde {
    /// `c = mη̃ / (e^{mη} − 1)`; exactly 1 under the step coupling.
    pub fn anchor_coefficient(&self) -> f64 {
        let x = self.m * self.eta;
        if x.abs() < 1e-8 {
            self.eta_tilde / (self.eta * (1.0 + x / 2.0 + x * x / 6.0))
        } else {
            self.m * self.eta_tilde / x.exp_m1()
        }
    }

    pub fn dim(&self) -> usize {
        self.anchor_gradient.len()
    }

    /// Drift `−(m w + c ∇f(w₀))`.
    pub fn drift(&self, w: &[f64], out: &mut [f64]) {
        let c = self.anchor_coefficient();
        for ((o, x), g) in out.iter_mut().zip(w).zip(&self.anchor_gradient) {
            *o = -(self.m * x + c * g);
        }
    }

    /// Exact mean at time `t`.
    pub fn mean(&self, w0: &[f64], t: f64) -> Vec<f64> {
        let c = self.anchor_coefficient();
        let decay = (-self.m * t).exp();
        let growth = -(-self.m * t).exp_m1() / self.m;
        w0.iter().zip(&self.anchor_gradient).map(|(w, g)| decay * w - c * growth * g).collect()
    }

    /// Terminal positions (row-major `n_paths × d`) of Euler–Maruyama paths
    /// from `w₀` to time `η` with substep `h`. Path `i` draws from stream
    /// `(seed, i)`.
    pub fn em_simulate(&self, w0: &[f64], h: f64, n_paths: usize, seed: u64) -> Result<Vec<f64>> {
        ensure_dim(self.dim(), w0.len())?;
        if !(h > 0.0) {
            return Err(Error::NonPositive { name: "h", value: h });
        }
        let ratio = self.eta / h;
        let n_steps = ratio.round();
        if n_steps < 1.0 || (n_steps * h - self.eta).abs() > 1e-12 * self.eta.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "substep {h} does not divide eta = {}",
                self.eta
            )));
        }
        let n_steps = n_steps as usize;
        let d = self.dim();
        let sd = (2.0 * h).sqrt();
        let mut out = vec![0.0; n_paths * d];
        out.par_chunks_mut(d).enumerate().for_each_init(
            || vec![0.0; d],
            |drift, (i, w)| {
                let mut rng = chain_stream(seed, i as u64);
                w.copy_from_slice(w0);
                for _ in 0..n_steps {
                    self.drift(w, drift);
                    for (x, b) in w.iter_mut().zip(drift.iter()) {
                        let z: f64 = rng.sample(StandardNormal);
                        *x += h * b + sd * z;
                    }
                }
            },
        );
        Ok(out)
    }
}
