//! Step-size rules with the constants of both convergence guarantees.
//!
//! A step `k → k+1` uses the diffusion time `η_{k+1}` and the gradient step
//! `η̃_k = (e^{mη_{k+1}} − 1)/m`, so that `m·η̃_k / (e^{mη_{k+1}} − 1) = 1`.

use crate::error::{Error, Result};
use crate::targets::TargetConstants;

const SERIES_CUTOFF: f64 = 1e-8;

/// `η̃ = (e^{mη} − 1)/m`, the gradient step coupled to diffusion time `η`.
pub fn coupled_eta_tilde(eta: f64, m: f64) -> f64 {
    let x = m * eta;
    if x.abs() < SERIES_CUTOFF {
        // (e^x − 1)/m = η(1 + x/2 + x²/6 + …)
        eta * (1.0 + x / 2.0 + x * x / 6.0)
    } else {
        x.exp_m1() / m
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive { name, value })
    }
}

fn check_constants(c: &TargetConstants) -> Result<()> {
    check_positive("m", c.m)?;
    check_positive("alpha_star", c.alpha_star)?;
    for (name, v) in [("L", c.l), ("tr_h", c.tr_h), ("tr_h_sqrt", c.tr_h_sqrt)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::NonPositive { name, value: v });
        }
    }
    Ok(())
}

/// `min{(8m)⁻¹, (8Tr(H^{1/2}))⁻¹, (1.5α∗)⁻¹, α∗/(8√2L²)}`. Terms whose
/// denominator vanishes are unbounded and dropped.
fn base_terms(c: &TargetConstants) -> [f64; 4] {
    let inv = |x: f64| if x > 0.0 { 1.0 / x } else { f64::INFINITY };
    [
        inv(8.0 * c.m),
        inv(8.0 * c.tr_h_sqrt),
        inv(1.5 * c.alpha_star),
        c.alpha_star * inv(8.0 * std::f64::consts::SQRT_2 * c.l * c.l),
    ]
}

/// Largest admissible fixed step for target accuracy `epsilon`.
pub fn eta_hat_fixed(c: &TargetConstants, epsilon: f64) -> Result<f64> {
    check_constants(c)?;
    check_positive("epsilon", epsilon)?;
    let eps_term =
        if c.tr_h > 0.0 { c.alpha_star * epsilon / (64.0 * c.tr_h) } else { f64::INFINITY };
    Ok(base_terms(c).into_iter().fold(eps_term, f64::min))
}

/// Base step of the varying schedule (no accuracy term).
pub fn eta_hat_varying(c: &TargetConstants) -> Result<f64> {
    check_constants(c)?;
    Ok(base_terms(c).into_iter().fold(f64::INFINITY, f64::min))
}

/// `η_{k+1} = 8η̂ / (9 + 3(k − K₀)₊ η̂ α∗)`.
pub fn eta_varying(k: u64, eta_hat: f64, alpha_star: f64, k0: u64) -> f64 {
    let excess = k.saturating_sub(k0) as f64;
    8.0 * eta_hat / (9.0 + 3.0 * excess * eta_hat * alpha_star)
}

/// Smallest non-negative integer `K₀ ≥ 9/(8η̂α∗) · ln(KL₀ α∗ / (123 η̂ Tr(H)))`.
pub fn k0_burn_in(kl0: f64, c: &TargetConstants, eta_hat: f64) -> Result<u64> {
    if !(kl0 >= 0.0 && kl0.is_finite()) {
        return Err(Error::InvalidArgument(format!("kl0 must be finite and >= 0, got {kl0}")));
    }
    check_positive("alpha_star", c.alpha_star)?;
    check_positive("eta_hat", eta_hat)?;
    if !(c.tr_h > 0.0) {
        return Err(Error::Invariant(
            "constants.tr_h must be > 0 for the varying schedule".into(),
        ));
    }
    let arg = kl0 * c.alpha_star / (123.0 * eta_hat * c.tr_h);
    if arg <= 1.0 {
        return Ok(0);
    }
    let rhs = 9.0 / (8.0 * eta_hat * c.alpha_star) * arg.ln();
    Ok(rhs.ceil().max(0.0) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    Fixed { eta: f64 },
    Varying { k0: u64 },
}

/// A resolved step-size rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub eta_hat: f64,
    /// Target accuracy; only meaningful for the fixed rule.
    pub epsilon: Option<f64>,
    pub constants: TargetConstants,
}

impl ScheduleSpec {
    /// Fixed rule at `η = η̂(ε)`.
    pub fn fixed(constants: TargetConstants, epsilon: f64) -> Result<Self> {
        let eta_hat = eta_hat_fixed(&constants, epsilon)?;
        Ok(Self { kind: ScheduleKind::Fixed { eta: eta_hat }, eta_hat, epsilon: Some(epsilon), constants })
    }

    /// Fixed rule at an explicit `η`. When `epsilon` is `None`, `η̂` omits
    /// the accuracy term. `η > η̂` is allowed here; callers that need the
    /// guarantee check [`ScheduleSpec::within_guarantee`].
    pub fn fixed_eta(constants: TargetConstants, eta: f64, epsilon: Option<f64>) -> Result<Self> {
        check_positive("eta", eta)?;
        let eta_hat = match epsilon {
            Some(eps) => eta_hat_fixed(&constants, eps)?,
            None => eta_hat_varying(&constants)?,
        };
        Ok(Self { kind: ScheduleKind::Fixed { eta }, eta_hat, epsilon, constants })
    }

    /// Varying rule; `kl0` is (an upper estimate of) `KL(p̃₀‖p∗)`.
    pub fn varying(constants: TargetConstants, kl0: f64) -> Result<Self> {
        let eta_hat = eta_hat_varying(&constants)?;
        let k0 = k0_burn_in(kl0, &constants, eta_hat)?;
        Ok(Self { kind: ScheduleKind::Varying { k0 }, eta_hat, epsilon: None, constants })
    }

    /// Diffusion time `η_{k+1}` of the step leaving iteration `k`.
    pub fn eta(&self, k: u64) -> f64 {
        match self.kind {
            ScheduleKind::Fixed { eta } => eta,
            ScheduleKind::Varying { k0 } => {
                eta_varying(k, self.eta_hat, self.constants.alpha_star, k0)
            }
        }
    }

    /// Gradient step `η̃_k` paired with [`ScheduleSpec::eta`].
    pub fn eta_tilde(&self, k: u64) -> f64 {
        coupled_eta_tilde(self.eta(k), self.constants.m)
    }

    pub fn k0(&self) -> Option<u64> {
        match self.kind {
            ScheduleKind::Varying { k0 } => Some(k0),
            ScheduleKind::Fixed { .. } => None,
        }
    }

    pub fn within_guarantee(&self) -> bool {
        match self.kind {
            ScheduleKind::Fixed { eta } => eta <= self.eta_hat,
            ScheduleKind::Varying { .. } => true,
        }
    }
}
