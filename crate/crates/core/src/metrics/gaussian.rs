use crate::error::{ensure_dim, Error, Result};

/// Diagonal Gaussian `N(mean, diag(var))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMoments {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl GaussianMoments {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        ensure_dim(mean.len(), var.len())?;
        if let Some(&v) = var.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::NonPositive { name: "var", value: v });
        }
        Ok(Self { mean, var })
    }

    pub fn isotropic(dim: usize, mean: f64, var: f64) -> Result<Self> {
        Self::new(vec![mean; dim], vec![var; dim])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Exact law after one prior-diffusion step on `f = (λ/2)‖w‖²`.
///
/// Stage 1 scales by `1 − η̃λ`; stage 2 maps `(μ, σ²)` to
/// `(e^{−mη}μ, e^{−2mη}σ² + (1 − e^{−2mη})/m)`.
pub fn gaussian_chain_advance(mom: &GaussianMoments, lambda: f64, m: f64, eta: f64, eta_tilde: f64) -> GaussianMoments {
    let shrink = 1.0 - eta_tilde * lambda;
    let decay = (-m * eta).exp();
    let decay2 = (-2.0 * m * eta).exp();
    let injected = -(-2.0 * m * eta).exp_m1() / m;
    GaussianMoments {
        mean: mom.mean.iter().map(|mu| decay * shrink * mu).collect(),
        var: mom.var.iter().map(|v| decay2 * shrink * shrink * v + injected).collect(),
    }
}

/// Exact law after one unadjusted Langevin step on `U = (c/2)‖w‖²`, where
/// `curvature = m + λ`: `(μ, σ²) ↦ ((1 − ηc)μ, (1 − ηc)²σ² + 2η)`.
pub fn ula_chain_advance(mom: &GaussianMoments, curvature: f64, eta: f64) -> GaussianMoments {
    let a = 1.0 - eta * curvature;
    GaussianMoments {
        mean: mom.mean.iter().map(|mu| a * mu).collect(),
        var: mom.var.iter().map(|v| a * a * v + 2.0 * eta).collect(),
    }
}

/// `KL(p ‖ q)` for diagonal Gaussians.
pub fn gaussian_kl(p: &GaussianMoments, q: &GaussianMoments) -> Result<f64> {
    ensure_dim(q.dim(), p.dim())?;
    for v in p.var.iter().chain(&q.var) {
        if !(*v > 0.0) {
            return Err(Error::NonPositive { name: "var", value: *v });
        }
    }
    let mut kl = 0.0;
    for i in 0..p.dim() {
        let r = p.var[i] / q.var[i];
        // r − 1 − ln r loses everything to cancellation near r = 1.
        let x = r - 1.0;
        let shape = if x.abs() < 1e-4 {
            x * x * (0.5 - x / 3.0 + x * x / 4.0)
        } else {
            x - r.ln()
        };
        kl += 0.5 * shape + (p.mean[i] - q.mean[i]).powi(2) / (2.0 * q.var[i]);
    }
    Ok(kl)
}
