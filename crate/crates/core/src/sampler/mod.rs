//! Ensemble samplers: the two-stage prior-diffusion Langevin step and the
//! unadjusted Langevin baseline.
//!
//! Chains are independent. Every per-chain loop runs on the rayon pool that
//! is current when the step is called; each chain draws only from its own
//! stream, so results do not depend on the number of workers.

mod schedule;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{ensure_dim, Error, Result};
use crate::rng::{chain_stream, Stream};
use crate::targets::Potential;

pub use schedule::{
    coupled_eta_tilde, eta_hat_fixed, eta_hat_varying, eta_varying, k0_burn_in, ScheduleKind,
    ScheduleSpec,
};

/// How stage-2 and ULA noise is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    #[default]
    Gaussian,
    /// Drift only. Streams are not advanced.
    Zero,
}

/// Positions of `n_chains` independent particles in `R^dim`, plus one random
/// stream per chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    positions: Vec<f64>,
    dim: usize,
    k: u64,
    streams: Vec<Stream>,
    noise: NoiseMode,
}

impl ChainState {
    /// Wraps row-major `positions` (`n_chains × dim`). Stream `i` is derived
    /// from `(master_seed, i)`.
    pub fn from_positions(positions: Vec<f64>, dim: usize, master_seed: u64) -> Result<Self> {
        if dim == 0 || positions.is_empty() || positions.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates cannot be split into rows of length {dim}",
                positions.len()
            )));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("positions"));
        }
        let n = positions.len() / dim;
        let streams = (0..n as u64).map(|i| chain_stream(master_seed, i)).collect();
        Ok(Self { positions, dim, k: 0, streams, noise: NoiseMode::Gaussian })
    }

    /// Draws every coordinate of chain `i` from `N(mean, std²)` using the
    /// chain's own stream.
    pub fn gaussian(n_chains: usize, dim: usize, mean: f64, std: f64, master_seed: u64) -> Result<Self> {
        if n_chains == 0 || dim == 0 {
            return Err(Error::InvalidArgument("n_chains and dim must be >= 1".into()));
        }
        if !(std >= 0.0 && std.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad initial law N({mean}, {std}²)")));
        }
        let mut streams: Vec<Stream> =
            (0..n_chains as u64).map(|i| chain_stream(master_seed, i)).collect();
        let mut positions = vec![0.0; n_chains * dim];
        positions.par_chunks_mut(dim).zip(streams.par_iter_mut()).for_each(|(row, rng)| {
            for x in row.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *x = mean + std * z;
            }
        });
        Ok(Self { positions, dim, k: 0, streams, noise: NoiseMode::Gaussian })
    }

    pub fn with_noise(mut self, noise: NoiseMode) -> Self {
        self.noise = noise;
        self
    }

    pub fn n_chains(&self) -> usize {
        self.streams.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of completed steps.
    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn chain(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    /// Coordinate `j` of every chain.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.positions.iter().skip(j).step_by(self.dim).copied().collect()
    }

    pub fn stream_mut(&mut self, i: usize) -> &mut Stream {
        &mut self.streams[i]
    }

    fn rows_mut(&mut self) -> impl IndexedParallelIterator<Item = (&mut [f64], &mut Stream)> {
        self.positions.par_chunks_mut(self.dim).zip(self.streams.par_iter_mut())
    }
}

/// Stage 1: `w ← w − η̃ ∇f(w)` for every chain. Deterministic.
pub fn lapd_stage1<P: Potential + ?Sized>(state: &mut ChainState, target: &P, eta_tilde: f64) -> Result<()> {
    ensure_dim(target.dim(), state.dim)?;
    if !(eta_tilde >= 0.0 && eta_tilde.is_finite()) {
        return Err(Error::InvalidArgument(format!("eta_tilde must be >= 0, got {eta_tilde}")));
    }
    let dim = state.dim;
    state.positions.par_chunks_mut(dim).try_for_each_init(
        || vec![0.0; dim],
        |grad, w| gradient_step(target, w, grad, eta_tilde),
    )
}

/// Stage 2: exact solution of `dw = −m w dt + √2 dB` over time `eta`,
/// `w ← e^{−mη} w + √((1 − e^{−2mη})/m) ξ`.
pub fn lapd_stage2_exact(state: &mut ChainState, m: f64, eta: f64) -> Result<()> {
    let (decay, sd) = ou_coefficients(m, eta)?;
    let noise = state.noise;
    state.rows_mut().for_each(|(w, rng)| ou_update(w, rng, decay, sd, noise));
    Ok(())
}

/// One full LAPD iteration with the schedule's `(η_{k+1}, η̃_k)`.
pub fn lapd_step<P: Potential + ?Sized>(
    state: &mut ChainState,
    target: &P,
    schedule: &ScheduleSpec,
) -> Result<()> {
    ensure_dim(target.dim(), state.dim)?;
    let m = target.m();
    let eta = schedule.eta(state.k);
    let eta_tilde = coupled_eta_tilde(eta, m);
    let (decay, sd) = ou_coefficients(m, eta)?;
    let dim = state.dim;
    let noise = state.noise;
    state.rows_mut().try_for_each_init(
        || vec![0.0; dim],
        |grad, (w, rng)| {
            gradient_step(target, w, grad, eta_tilde)?;
            ou_update(w, rng, decay, sd, noise);
            Ok::<(), crate::error::Error>(())
        },
    )?;
    state.k += 1;
    Ok(())
}

/// Euler–Maruyama step on the full potential, `w ← w − η∇U(w) + √(2η) ξ`.
pub fn ula_step<P: Potential + ?Sized>(state: &mut ChainState, target: &P, eta: f64) -> Result<()> {
    ensure_dim(target.dim(), state.dim)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::NonPositive { name: "eta", value: eta });
    }
    let m = target.m();
    let sd = (2.0 * eta).sqrt();
    let dim = state.dim;
    let noise = state.noise;
    state.rows_mut().try_for_each_init(
        || vec![0.0; dim],
        |grad, (w, rng)| {
            target.grad_into(w, grad);
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite("grad_f"));
            }
            for (x, g) in w.iter_mut().zip(grad.iter()) {
                let drift = g + m * *x;
                *x -= eta * drift;
                if noise == NoiseMode::Gaussian {
                    let z: f64 = rng.sample(StandardNormal);
                    *x += sd * z;
                }
            }
            Ok(())
        },
    )?;
    state.k += 1;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampler {
    /// Prior-diffusion Langevin with the given step rule.
    Lapd(ScheduleSpec),
    /// Unadjusted Langevin, step `η_{k+1}` taken from the schedule.
    Ula(ScheduleSpec),
}

impl Sampler {
    pub fn schedule(&self) -> &ScheduleSpec {
        match self {
            Sampler::Lapd(s) | Sampler::Ula(s) => s,
        }
    }

    pub fn step<P: Potential + ?Sized>(&self, state: &mut ChainState, target: &P) -> Result<()> {
        match self {
            Sampler::Lapd(s) => lapd_step(state, target, s),
            Sampler::Ula(s) => ula_step(state, target, s.eta(state.k)),
        }
    }
}

/// Advances `state` by `n_steps`, calling `on_metric` before the first step
/// and after every `metric_every`-th step, i.e. `⌊n_steps/metric_every⌋ + 1`
/// times in total.
pub fn run_chain<P, F>(
    mut state: ChainState,
    target: &P,
    sampler: &Sampler,
    n_steps: u64,
    metric_every: u64,
    mut on_metric: F,
) -> Result<ChainState>
where
    P: Potential + ?Sized,
    F: FnMut(&ChainState) -> Result<()>,
{
    if metric_every == 0 {
        return Err(Error::InvalidArgument("metric_every must be >= 1".into()));
    }
    on_metric(&state)?;
    for step in 1..=n_steps {
        sampler.step(&mut state, target)?;
        if step % metric_every == 0 {
            on_metric(&state)?;
        }
    }
    Ok(state)
}

fn gradient_step<P: Potential + ?Sized>(target: &P, w: &mut [f64], grad: &mut [f64], eta_tilde: f64) -> Result<()> {
    if eta_tilde == 0.0 {
        return Ok(());
    }
    target.grad_into(w, grad);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("grad_f"));
    }
    for (x, g) in w.iter_mut().zip(grad.iter()) {
        *x -= eta_tilde * g;
    }
    Ok(())
}

/// `(e^{−mη}, √((1 − e^{−2mη})/m))`.
pub(crate) fn ou_coefficients(m: f64, eta: f64) -> Result<(f64, f64)> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::NonPositive { name: "m", value: m });
    }
    if !(eta > 0.0) {
        return Err(Error::NonPositive { name: "eta", value: eta });
    }
    let decay = (-m * eta).exp();
    let var = -(-2.0 * m * eta).exp_m1() / m;
    Ok((decay, var.sqrt()))
}

fn ou_update(w: &mut [f64], rng: &mut Stream, decay: f64, sd: f64, noise: NoiseMode) {
    match noise {
        NoiseMode::Gaussian => {
            for x in w.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *x = decay * *x + sd * z;
            }
        }
        NoiseMode::Zero => w.iter_mut().for_each(|x| *x *= decay),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{GaussianMixtureTarget, QuadraticTarget};

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    fn constant_state(n: usize, row: &[f64], seed: u64) -> ChainState {
        ChainState::from_positions(row.repeat(n), row.len(), seed).unwrap()
    }

    #[test]
    fn stage1_examples() {
        let mix = GaussianMixtureTarget::new(vec![vec![3.0, 0.0]], 0.1).unwrap();
        let mut s = constant_state(3, &[1.5, 0.0], 1);
        lapd_stage1(&mut s, &mix, 0.0).unwrap();
        assert_eq!(s.chain(0), &[1.5, 0.0]);
        lapd_stage1(&mut s, &mix, 0.5).unwrap();
        assert_eq!(s.chain(2), &[3.0, 0.0]);

        let quad = QuadraticTarget::new(1.0, 3, 1.0).unwrap();
        let mut s = ChainState::gaussian(5, 3, 0.0, 2.0, 9).unwrap();
        lapd_stage1(&mut s, &quad, 1.0).unwrap();
        assert!(s.positions().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn stage2_moments_match_closed_form() {
        let n = 100_000;
        let mut s = constant_state(n, &[2.0], 11);
        lapd_stage2_exact(&mut s, 1.0, 2f64.ln()).unwrap();
        let (mean, var) = mean_var(s.positions());
        let nf = n as f64;
        assert!((mean - 1.0).abs() < 5.0 * (0.75 / nf).sqrt(), "mean {mean}");
        assert!((var - 0.75).abs() < 5.0 * 0.75 * (2.0 / nf).sqrt(), "var {var}");
    }

    #[test]
    fn stage2_long_time_forgets_the_start() {
        let n = 100_000;
        let mut s = constant_state(n, &[50.0], 12);
        lapd_stage2_exact(&mut s, 2.0, 40.0).unwrap();
        let (mean, var) = mean_var(s.positions());
        assert!(mean.abs() < 5.0 * (0.5 / n as f64).sqrt());
        assert!((var - 0.5).abs() < 5.0 * 0.5 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn stage2_without_noise_is_pure_decay() {
        let mut s = constant_state(2, &[2.0, -1.0], 3).with_noise(NoiseMode::Zero);
        lapd_stage2_exact(&mut s, 1.5, 0.3).unwrap();
        let decay = (-1.5f64 * 0.3).exp();
        assert_eq!(s.chain(1), &[2.0 * decay, -1.0 * decay]);
    }

    #[test]
    fn lapd_step_equals_stage1_then_stage2() {
        let mix = GaussianMixtureTarget::new(vec![vec![1.0, 0.5], vec![-1.0, 2.0]], 0.1).unwrap();
        let c = crate::targets::Potential::constants(&mix);
        let sched = ScheduleSpec::fixed_eta(c, 0.2, None).unwrap();
        let base = ChainState::gaussian(64, 2, 0.0, 1.0, 5).unwrap();
        let mut a = base.clone();
        lapd_step(&mut a, &mix, &sched).unwrap();
        let mut b = base;
        lapd_stage1(&mut b, &mix, sched.eta_tilde(0)).unwrap();
        lapd_stage2_exact(&mut b, 1.0, sched.eta(0)).unwrap();
        assert_eq!(a.positions(), b.positions());
        assert_eq!(a.k(), 1);
    }

    #[test]
    fn one_step_on_quadratic_is_annihilate_then_inject() {
        // λ = m = 1, η = ln 2 ⇒ η̃ = 1: stage 1 maps every chain to 0.
        let quad = QuadraticTarget::new(1.0, 2, 1.0).unwrap();
        let sched = ScheduleSpec::fixed_eta(quad.constants(), 2f64.ln(), None).unwrap();
        let n = 100_000;
        let mut s = ChainState::gaussian(n, 2, 0.0, 1.0, 21).unwrap();
        lapd_step(&mut s, &quad, &sched).unwrap();
        for j in 0..2 {
            let (mean, var) = mean_var(&s.coordinate(j));
            assert!(mean.abs() < 5.0 * (0.75 / n as f64).sqrt());
            assert!((var - 0.75).abs() < 5.0 * 0.75 * (2.0 / n as f64).sqrt());
        }
    }

    #[test]
    fn equal_seeds_are_bit_identical() {
        let mix = GaussianMixtureTarget::new(vec![vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]], 0.1).unwrap();
        let sched = ScheduleSpec::varying(mix.constants(), 0.5).unwrap();
        let sampler = Sampler::Lapd(sched);
        let run = |seed| {
            let s = ChainState::gaussian(200, 3, 0.0, 1.0, seed).unwrap();
            run_chain(s, &mix, &sampler, 25, 5, |_| Ok(())).unwrap()
        };
        assert_eq!(run(4).positions(), run(4).positions());
        assert_ne!(run(4).positions(), run(5).positions());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mix = GaussianMixtureTarget::new(vec![vec![2.0, 0.0], vec![-1.0, 1.0]], 0.1).unwrap();
        let sampler = Sampler::Lapd(ScheduleSpec::fixed_eta(mix.constants(), 0.05, None).unwrap());
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let s = ChainState::gaussian(1000, 2, 0.0, 1.0, 8).unwrap();
                run_chain(s, &mix, &sampler, 10, 10, |_| Ok(())).unwrap()
            })
        };
        assert_eq!(run(1).positions(), run(3).positions());
    }

    #[test]
    fn ula_zero_noise_is_linear_contraction() {
        let quad = QuadraticTarget::new(0.5, 2, 1.0).unwrap();
        let mut s = constant_state(1, &[1.0, -2.0], 0).with_noise(NoiseMode::Zero);
        ula_step(&mut s, &quad, 0.1).unwrap();
        let f = 1.0 - 0.1 * 1.5;
        assert!((s.chain(0)[0] - f).abs() < 1e-15);
        assert!((s.chain(0)[1] + 2.0 * f).abs() < 1e-15);
        assert!(matches!(ula_step(&mut s, &quad, 0.0), Err(Error::NonPositive { .. })));
    }

    #[test]
    fn ula_pure_prior_variance_is_biased() {
        // Fixed point of σ² ← (1−ηm)²σ² + 2η at η = 0.1, m = 1.
        let exact: f64 = 0.2 / (1.0 - 0.81);
        assert!((exact - 1.0526315789473684).abs() < 1e-12);
        let quad = QuadraticTarget::new(0.0, 10, 1.0).unwrap();
        let sampler = Sampler::Ula(ScheduleSpec::fixed_eta(quad.constants(), 0.1, None).unwrap());
        let s = ChainState::gaussian(10_000, 10, 0.0, 1.0, 17).unwrap();
        let s = run_chain(s, &quad, &sampler, 150, 150, |_| Ok(())).unwrap();
        let (_, var) = mean_var(s.positions());
        let n = s.positions().len() as f64;
        assert!((var - exact).abs() < 5.0 * exact * (2.0 / n).sqrt(), "{var}");
    }

    #[test]
    fn run_chain_cadence_and_zero_steps() {
        let quad = QuadraticTarget::new(1.0, 1, 1.0).unwrap();
        let sampler = Sampler::Lapd(ScheduleSpec::fixed(quad.constants(), 0.5).unwrap());
        let init = ChainState::gaussian(4, 1, 0.0, 1.0, 2).unwrap();
        let out = run_chain(init.clone(), &quad, &sampler, 0, 3, |_| Ok(())).unwrap();
        assert_eq!(out.positions(), init.positions());
        assert_eq!(out.k(), 0);

        for (n, c) in [(10u64, 3u64), (9, 3), (7, 1), (5, 10)] {
            let mut calls = Vec::new();
            run_chain(init.clone(), &quad, &sampler, n, c, |s| {
                calls.push(s.k());
                Ok(())
            })
            .unwrap();
            assert_eq!(calls.len() as u64, n / c + 1);
            assert_eq!(calls[0], 0);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let quad = QuadraticTarget::new(1.0, 3, 1.0).unwrap();
        let mut s = ChainState::gaussian(2, 2, 0.0, 1.0, 0).unwrap();
        assert!(matches!(lapd_stage1(&mut s, &quad, 0.1), Err(Error::DimensionMismatch { .. })));
    }
}
