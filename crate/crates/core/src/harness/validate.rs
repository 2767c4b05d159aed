//! Named invariant suites behind `sampler validate`.
//!
//! Each check is also callable on its own with explicit sizes, so tests can
//! run reduced versions.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernel::TransitionKernel;
use crate::metrics::{gaussian_chain_advance, GaussianMoments};
use crate::oracle::{fd_gradient, fd_hessian, gauss_legendre, linear_fit};
use crate::rng::{aux_stream, chain_stream, AuxTag, Stream};
use crate::sampler::{
    coupled_eta_tilde, eta_hat_fixed, eta_varying, k0_burn_in, lapd_stage1, lapd_stage2_exact, lapd_step,
    ChainState, ScheduleSpec,
};
use crate::targets::{h_half, grad_f, hessian_f, GaussianMixtureTarget, Potential, QuadraticTarget, TargetConstants};

pub const SUITES: [&str; 4] = ["kernel", "gradients", "schedules", "oracle"];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Runs a suite at full size.
pub fn run_suite(name: &str) -> Result<Vec<Check>> {
    Ok(match name {
        "kernel" => vec![composition(1000, 0)?, normalization()?, em_weak_order(1_000_000, 0)?.1],
        "gradients" => vec![gradients(100, 0)?, hessians(100, 0)?, sandwich(100, 0)?, trace_bound(20, 0)?],
        "schedules" => schedules()?,
        "oracle" => vec![exact_oracle(100_000, 200, 10, 0)?],
        other => {
            return Err(Error::Config(format!(
                "unknown suite `{other}` (expected one of {})",
                SUITES.join(", ")
            )))
        }
    })
}

fn validation_rng(seed: u64) -> Stream {
    aux_stream(seed, AuxTag::Validation)
}

fn normal_vec(rng: &mut Stream, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Mixture with `k` components in `d` dimensions, means of scale 1.5.
pub fn random_mixture(rng: &mut Stream, k: usize, d: usize) -> Result<GaussianMixtureTarget> {
    GaussianMixtureTarget::new((0..k).map(|_| normal_vec(rng, d, 1.5)).collect(), 0.1)
}

fn random_shape(rng: &mut Stream) -> (usize, usize) {
    (rng.random_range(1..=4), rng.random_range(1..=8))
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Two-stage step vs the closed-form kernel with the same noise.
pub fn composition(n_pairs: usize, seed: u64) -> Result<Check> {
    let mut rng = validation_rng(seed);
    let mut worst = 0.0f64;
    for i in 0..n_pairs {
        let (k, d) = random_shape(&mut rng);
        let mix = random_mixture(&mut rng, k.max(2), d)?;
        let eta = rng.random_range(1e-3..0.5);
        let kernel = TransitionKernel::new(&mix, eta)?;
        let w0 = normal_vec(&mut rng, d, 2.0);
        let pair_seed = seed.wrapping_add(i as u64);
        // Stage 2 of chain 0 consumes the first d normals of this stream.
        let mut noise = chain_stream(pair_seed, 0);
        let xi = normal_vec(&mut noise, d, 1.0);
        let mut state = ChainState::from_positions(w0.clone(), d, pair_seed)?;
        lapd_stage1(&mut state, &mix, kernel.eta_tilde())?;
        lapd_stage2_exact(&mut state, mix.m(), eta)?;
        let direct = kernel.sample_with_noise(&w0, &xi)?;
        worst = worst.max(max_abs(direct.iter().zip(state.chain(0)).map(|(a, b)| a - b)));
    }
    Ok(Check::new(
        "kernel composition",
        worst <= 1e-12,
        format!("max |Δ| = {worst:.3e} over {n_pairs} pairs (tol 1e-12)"),
    ))
}

/// 1-D transition density integrates to one.
pub fn normalization() -> Result<Check> {
    let mut worst = 0.0f64;
    for (means, eta, w0) in [
        (vec![vec![1.5], vec![-0.5]], 0.3, 0.4),
        (vec![vec![2.0], vec![-2.0], vec![0.5]], 0.05, -1.7),
        (vec![vec![0.7], vec![0.0]], 1.2, 3.0),
    ] {
        let mix = GaussianMixtureTarget::new(means, 0.1)?;
        let kernel = TransitionKernel::new(&mix, eta)?;
        let c = kernel.mean_map(&[w0])?[0];
        let s = kernel.var_scalar().sqrt();
        // Dimensions match by construction, so the density cannot fail here.
        kernel.transition_log_density(&[c], &[w0])?;
        let total = gauss_legendre(c - 12.0 * s, c + 12.0 * s, 128, |x| {
            kernel.transition_log_density(&[x], &[w0]).map_or(f64::NAN, f64::exp)
        });
        worst = worst.max((total - 1.0).abs());
    }
    Ok(Check::new("kernel normalization", worst < 1e-8, format!("max |∫p − 1| = {worst:.3e} (tol 1e-8)")))
}

/// Weak error of Euler–Maruyama on the interpolating SDE, with the kernel
/// mean as reference, over substeps `η/2 … η/64`. Returns the fitted
/// log-log slope.
pub fn em_weak_order(n_paths: usize, seed: u64) -> Result<(f64, Check)> {
    let q = QuadraticTarget::new(0.5, 1, 1.0)?;
    let eta = 1.0;
    let w0 = [8.0];
    let kernel = TransitionKernel::new(&q, eta)?;
    let sde = kernel.sde(&w0)?;
    let exact = kernel.kernel_mean(&w0, eta)?[0];
    let mut log_h = Vec::new();
    let mut log_err = Vec::new();
    let mut detail = Vec::new();
    for (i, div) in [2u32, 4, 8, 16, 32, 64].into_iter().enumerate() {
        let h = eta / div as f64;
        let paths = sde.em_simulate(&w0, h, n_paths, seed.wrapping_add(1000 * i as u64))?;
        let mean = paths.iter().sum::<f64>() / n_paths as f64;
        let err = (mean - exact).abs();
        log_h.push(h.ln());
        log_err.push(err.ln());
        detail.push(format!("{err:.2e}"));
    }
    let fit = linear_fit(&log_h, &log_err);
    let pass = (fit.slope - 1.0).abs() <= 0.3;
    Ok((
        fit.slope,
        Check::new(
            "EM weak order",
            pass,
            format!("slope {:.3} (1.0 ± 0.3), errors [{}]", fit.slope, detail.join(", ")),
        ),
    ))
}

/// Relative error of the analytic gradient against central differences.
pub fn gradients(n_points: usize, seed: u64) -> Result<Check> {
    let mut rng = validation_rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_points {
        let (k, d) = random_shape(&mut rng);
        let mix = random_mixture(&mut rng, k, d)?;
        let w = normal_vec(&mut rng, d, 2.0);
        let g = grad_f(&mix, &w)?;
        let fd = fd_gradient(&mix, &w, 1e-5);
        let scale = max_abs(fd.iter().copied()).max(1.0);
        worst = worst.max(max_abs(g.iter().zip(&fd).map(|(a, b)| a - b)) / scale);
    }
    Ok(Check::new("gradient vs FD", worst < 1e-6, format!("max rel err {worst:.3e} (tol 1e-6)")))
}

pub fn hessians(n_points: usize, seed: u64) -> Result<Check> {
    let mut rng = validation_rng(seed.wrapping_add(1));
    let mut worst = 0.0f64;
    for _ in 0..n_points {
        let (k, d) = random_shape(&mut rng);
        let mix = random_mixture(&mut rng, k, d)?;
        let w = normal_vec(&mut rng, d, 2.0);
        let hess = hessian_f(&mix, &w)?;
        let fd = fd_hessian(&mix, &w, 1e-5);
        let scale = max_abs(fd.iter().flatten().copied()).max(1.0);
        let err = max_abs((0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| hess[(i, j)] - fd[i][j]));
        worst = worst.max(err / scale);
    }
    Ok(Check::new("Hessian vs FD", worst < 1e-5, format!("max rel err {worst:.3e} (tol 1e-5)")))
}

fn largest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Spectrum of `−∇²f` lies in `[0, λ_max(H^{1/2})]`.
pub fn sandwich(n_points: usize, seed: u64) -> Result<Check> {
    let mut rng = validation_rng(seed.wrapping_add(2));
    let (mut lo, mut hi_slack) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..n_points {
        let (k, d) = random_shape(&mut rng);
        let mix = random_mixture(&mut rng, k, d)?;
        let w = normal_vec(&mut rng, d, 2.0);
        let neg = -hessian_f(&mix, &w)?;
        let eig = neg.symmetric_eigen().eigenvalues;
        let cap = largest_eigenvalue(&h_half(&mix).matrix);
        for &e in eig.iter() {
            lo = lo.min(e);
            hi_slack = hi_slack.min(cap - e);
        }
    }
    let pass = lo >= -1e-10 && hi_slack >= -1e-10;
    Ok(Check::new(
        "Hessian sandwich",
        pass,
        format!("min eigenvalue {lo:.3e}, min slack to λ_max(H^1/2) {hi_slack:.3e} (tol 1e-10)"),
    ))
}

/// `Tr H ≤ 16 K⁴ R_μ⁴`.
pub fn trace_bound(n_configs: usize, seed: u64) -> Result<Check> {
    let mut rng = validation_rng(seed.wrapping_add(3));
    let mut worst = f64::INFINITY;
    for _ in 0..n_configs {
        let (k, d) = random_shape(&mut rng);
        let mix = random_mixture(&mut rng, k, d)?;
        let tr = h_half(&mix).trace_h;
        let bound = mix.trace_bound();
        worst = worst.min(bound - tr);
    }
    Ok(Check::new("trace bound", worst >= 0.0, format!("min (16K⁴R⁴ − Tr H) = {worst:.3e}")))
}

/// Step-size rules: coupling identity, bound terms, continuity and
/// monotonicity of the varying rule, burn-in behaviour.
pub fn schedules() -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let mut coupling = 0.0f64;
    for (eta, m) in [(1e-6, 1.0), (0.01, 1.0), (0.5, 2.0), (2f64.ln(), 1.0), (1.0, 5.0)] {
        let t = coupled_eta_tilde(eta, m);
        coupling = coupling.max((m * t / (m * eta).exp_m1() - 1.0).abs());
    }
    out.push(Check::new("coupling identity", coupling < 1e-12, format!("max |mη̃/(e^{{mη}}−1) − 1| = {coupling:.3e}")));

    let c = TargetConstants { m: 1.0, l: 1.0, tr_h: 4.0, tr_h_sqrt: 4.0, alpha_star: 2.0 };
    let eta = eta_hat_fixed(&c, 0.1)?;
    out.push(Check::new("fixed bound example", (eta - 0.00078125).abs() < 1e-18, format!("η̂ = {eta}")));

    let spec = ScheduleSpec::varying(c, 10.0)?;
    let k0 = spec.k0().unwrap_or(0);
    let mut monotone = true;
    let mut prev = f64::INFINITY;
    for k in 0..10_000 {
        let e = spec.eta(k);
        monotone &= e > 0.0 && e <= prev && e <= spec.eta_hat;
        prev = e;
    }
    let at_k0 = eta_varying(k0, spec.eta_hat, c.alpha_star, k0);
    out.push(Check::new(
        "varying schedule",
        monotone && (at_k0 - 8.0 * spec.eta_hat / 9.0).abs() < 1e-15,
        format!("K₀ = {k0}, η(K₀) = {at_k0:.6e}, non-increasing over 10⁴ steps: {monotone}"),
    ));

    let mut burn = true;
    for kl0 in [0.0, 1e-3, 1.0, 10.0, 1e3, 1e6] {
        let a = k0_burn_in(kl0, &c, 0.04)?;
        let b = k0_burn_in(2.0 * kl0, &c, 0.04)?;
        let cap = (9.0 / (8.0 * 0.04 * c.alpha_star) * 2f64.ln()).ceil() as u64 + 1;
        burn &= b >= a && b - a <= cap;
    }
    let flat = TargetConstants { tr_h: 0.0, ..c };
    burn &= matches!(k0_burn_in(1.0, &flat, 0.04), Err(Error::Invariant(_)));
    out.push(Check::new("burn-in", burn, "non-decreasing in kl0, bounded growth, Tr H = 0 rejected".into()));
    Ok(out)
}

/// Empirical per-coordinate moments of a quadratic-target LAPD ensemble
/// against the exact Gaussian recursion (λ = 1, m = 1, d = 4), within 5 SE.
pub fn exact_oracle(n_chains: usize, n_steps: u64, every: u64, seed: u64) -> Result<Check> {
    let (lambda, m, d) = (1.0, 1.0, 4);
    let q = QuadraticTarget::new(lambda, d, m)?;
    let schedule = ScheduleSpec::fixed(q.constants(), 0.5)?;
    let mut state = ChainState::gaussian(n_chains, d, 1.0, 1.5, seed)?;
    let mut exact = GaussianMoments::isotropic(d, 1.0, 2.25)?;
    let nf = n_chains as f64;
    let mut worst = 0.0f64;
    for k in 0..n_steps {
        lapd_step(&mut state, &q, &schedule)?;
        exact = gaussian_chain_advance(&exact, lambda, m, schedule.eta(k), schedule.eta_tilde(k));
        if (k + 1) % every != 0 {
            continue;
        }
        for j in 0..d {
            let xs = state.coordinate(j);
            let mean = xs.iter().sum::<f64>() / nf;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            let (mu, s2) = (exact.mean[j], exact.var[j]);
            let z_mean = (mean - mu).abs() / (s2 / nf).sqrt();
            let z_var = (var - s2).abs() / (s2 * (2.0 / (nf - 1.0)).sqrt());
            worst = worst.max(z_mean).max(z_var);
        }
    }
    Ok(Check::new(
        "exact-oracle agreement",
        worst < 5.0,
        format!("max |z| = {worst:.2} over mean and variance, {n_chains} chains, {n_steps} steps (tol 5 SE)"),
    ))
}
