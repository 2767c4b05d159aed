use crate::error::{Error, Result};
use crate::targets::TargetConstants;

/// Right-hand side of the fixed-step guarantee,
/// `e^{−α∗ηk} KL₀ + (32η/α∗) Tr(H)`.
pub fn theorem_fixed_bound(k: u64, kl0: f64, eta: f64, c: &TargetConstants) -> f64 {
    (-c.alpha_star * eta * k as f64).exp() * kl0 + 32.0 * eta / c.alpha_star * c.tr_h
}

/// Right-hand side of the varying-step guarantee for `k ≥ T₀`,
/// `2¹⁰ Tr(H) / (27 L^{1.5} α∗ + 6 (k − T₀) α∗²)`.
pub fn theorem_varying_bound(k: u64, t0: u64, c: &TargetConstants) -> Result<f64> {
    if k < t0 {
        return Err(Error::InvalidArgument(format!("k = {k} precedes burn-in T0 = {t0}")));
    }
    let a = c.alpha_star;
    let denom = 27.0 * c.l.powf(1.5) * a + 6.0 * (k - t0) as f64 * a * a;
    Ok(1024.0 * c.tr_h / denom)
}

/// Bound versus measurement at one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEvaluation {
    pub k: u64,
    pub bound_value: f64,
    pub measured: f64,
    /// `bound_value − measured`; negative means the bound is violated.
    pub slack: f64,
}

impl BoundEvaluation {
    pub fn new(k: u64, bound_value: f64, measured: f64) -> Self {
        Self { k, bound_value, measured, slack: bound_value - measured }
    }

    pub fn holds(&self) -> bool {
        self.slack >= 0.0
    }
}
