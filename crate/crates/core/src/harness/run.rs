//! Executing experiments and collecting metric records.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::{
    gaussian_chain_advance, gaussian_kl, hist_kl_1d, names, sliced_w2, theorem_fixed_bound,
    theorem_varying_bound, ula_chain_advance, GaussianMoments,
};
use crate::rng::{aux_stream, AuxTag};
use crate::sampler::{coupled_eta_tilde, run_chain, ChainState, Sampler, ScheduleKind};
use crate::targets::{Potential, TargetModel};

use super::config::{expand_sweep, resolve, ExperimentConfig, ResolvedExperiment, SweepAxis, TargetConfig};
use super::format_float;

pub const CSV_HEADER: [&str; 8] = ["run_id", "k", "metric", "value", "d", "axis_value", "config_hash", "seed"];

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub run_id: String,
    pub k: u64,
    pub metric: &'static str,
    pub value: f64,
    pub d: usize,
    pub axis_value: String,
    pub config_hash: String,
    pub seed: u64,
}

/// Command-line overrides shared by `run` and `sweep`.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub force: bool,
}

/// Inlines `means_csv` so that the config hash depends on the means
/// themselves, not on where the file lives.
fn materialize(config: &ExperimentConfig) -> Result<ExperimentConfig> {
    let mut out = config.clone();
    if let TargetConfig::Mixture { means: None, means_csv: Some(path), alpha_star } = &config.target {
        out.target = TargetConfig::Mixture {
            means: Some(super::config::read_means_csv(path)?),
            means_csv: None,
            alpha_star: *alpha_star,
        };
    }
    Ok(out)
}

/// Runs one experiment and returns its records, metrics at `k = 0` first.
pub fn execute(config: &ExperimentConfig, run_id: &str, axis_value: &str) -> Result<Vec<ExperimentRecord>> {
    let config = materialize(config)?;
    let exp = resolve(&config)?;
    let hash = config.config_hash();
    let seed = config.master_seed;
    let dim = exp.dim();
    let init = ChainState::gaussian(config.n_chains, dim, exp.init.mean, exp.init.std, seed)?;
    let mut tracker = MetricTracker::new(&exp, &config)?;
    let mut records = Vec::new();
    run_chain(init, &exp.target, &exp.sampler, config.n_steps, config.metric_every, |state| {
        for (metric, value) in tracker.evaluate(state)? {
            records.push(ExperimentRecord {
                run_id: run_id.to_string(),
                k: state.k(),
                metric,
                value,
                d: dim,
                axis_value: axis_value.to_string(),
                config_hash: hash.clone(),
                seed,
            });
        }
        Ok(())
    })?;
    Ok(records)
}

/// `run`: one experiment from a config file.
pub fn cmd_run(config_path: &Path, opts: &RunOptions) -> Result<Vec<ExperimentRecord>> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(seed) = opts.seed {
        config.master_seed = seed;
    }
    let sink = output_path(config_path, &config, opts)?;
    let records = execute(&config, "run0", "")?;
    emit(&records, sink.as_deref())?;
    Ok(records)
}

/// `sweep`: one experiment per value of `axis`, concatenated.
pub fn cmd_sweep(config_path: &Path, axis: SweepAxis, opts: &RunOptions) -> Result<Vec<ExperimentRecord>> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(seed) = opts.seed {
        config.master_seed = seed;
    }
    let runs = expand_sweep(&config, axis)?;
    // Resolve every run up front so a bad axis value fails before any work.
    for (_, cfg) in &runs {
        resolve(&materialize(cfg)?)?;
    }
    let sink = output_path(config_path, &config, opts)?;
    let mut records = Vec::new();
    for (i, (label, cfg)) in runs.iter().enumerate() {
        records.extend(execute(cfg, &format!("run{i}"), label)?);
    }
    emit(&records, sink.as_deref())?;
    Ok(records)
}

fn output_path(config_path: &Path, config: &ExperimentConfig, opts: &RunOptions) -> Result<Option<PathBuf>> {
    let path = match (&opts.output, &config.output_path) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(p)) if p.is_relative() => {
            Some(config_path.parent().unwrap_or_else(|| Path::new(".")).join(p))
        }
        (None, p) => p.clone(),
    };
    if let Some(p) = &path {
        if p.exists() && !opts.force {
            return Err(Error::InvalidArgument(format!(
                "output {} already exists (use --force to overwrite)",
                p.display()
            )));
        }
    }
    Ok(path)
}

fn emit(records: &[ExperimentRecord], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p)?;
            write_csv(records, std::io::BufWriter::new(file))
        }
        None => write_csv(records, std::io::stdout().lock()),
    }
}

/// Writes header and rows with RFC-4180 quoting.
pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.run_id.as_str(),
            &r.k.to_string(),
            r.metric,
            &format_float(r.value),
            &r.d.to_string(),
            &r.axis_value,
            &r.config_hash,
            &r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Evaluates the configured metrics on ensemble snapshots, carrying the
/// exact Gaussian recursion for the analytically tractable coordinates.
struct MetricTracker<'a> {
    exp: &'a ResolvedExperiment,
    config: &'a ExperimentConfig,
    /// Exact law of the analytic coordinates at iteration `tracked_k`.
    analytic: Option<GaussianMoments>,
    analytic_target: Option<GaussianMoments>,
    /// Curvature of `f` along the analytic coordinates.
    lambda: f64,
    tracked_k: u64,
    reference_coord: Option<Vec<f64>>,
    reference_full: Option<Vec<f64>>,
}

impl<'a> MetricTracker<'a> {
    fn new(exp: &'a ResolvedExperiment, config: &'a ExperimentConfig) -> Result<Self> {
        let n = exp.analytic_coords.len();
        let (lambda, target_var) = match &exp.target {
            TargetModel::Quadratic(q) => (q.lambda, q.target_var()),
            TargetModel::Mixture(_) => (0.0, 1.0 / exp.target.m()),
        };
        let (analytic, analytic_target) = if n > 0 {
            let var0 = exp.init.std * exp.init.std;
            (
                Some(GaussianMoments::isotropic(n, exp.init.mean, var0)?),
                Some(GaussianMoments::isotropic(n, 0.0, target_var)?),
            )
        } else {
            (None, None)
        };
        let wants = |name| exp.metrics.contains(&name);
        let (mut reference_coord, mut reference_full) = (None, None);
        if wants(names::KL_HIST1D) || wants(names::SLICED_W2) {
            let dim = exp.dim();
            let mut rng = aux_stream(config.master_seed, AuxTag::Reference);
            let mut row = vec![0.0; dim];
            let mut coord = Vec::with_capacity(config.n_chains);
            let mut full = Vec::new();
            for _ in 0..config.n_chains {
                exp.target.sample(&mut rng, &mut row);
                coord.push(row[config.hist_coord.min(dim - 1)]);
                if wants(names::SLICED_W2) {
                    full.extend_from_slice(&row);
                }
            }
            reference_coord = Some(coord);
            if wants(names::SLICED_W2) {
                reference_full = Some(full);
            }
        }
        Ok(Self {
            exp,
            config,
            analytic,
            analytic_target,
            lambda,
            tracked_k: 0,
            reference_coord,
            reference_full,
        })
    }

    fn advance_analytic(&mut self, to: u64) {
        let Some(mut mom) = self.analytic.take() else {
            return;
        };
        let m = self.exp.target.m();
        while self.tracked_k < to {
            let eta = self.exp.sampler.schedule().eta(self.tracked_k);
            mom = match self.exp.sampler {
                Sampler::Lapd(_) => gaussian_chain_advance(&mom, self.lambda, m, eta, coupled_eta_tilde(eta, m)),
                Sampler::Ula(_) => ula_chain_advance(&mom, m + self.lambda, eta),
            };
            self.tracked_k += 1;
        }
        self.analytic = Some(mom);
    }

    fn evaluate(&mut self, state: &ChainState) -> Result<Vec<(&'static str, f64)>> {
        let k = state.k();
        self.advance_analytic(k);
        let schedule = *self.exp.sampler.schedule();
        let mut out = Vec::with_capacity(self.exp.metrics.len());
        for &metric in &self.exp.metrics {
            let value = match metric {
                names::KL_EXACT => {
                    let (p, q) = (self.analytic.as_ref(), self.analytic_target.as_ref());
                    gaussian_kl(p.expect("analytic coords"), q.expect("analytic coords"))?
                }
                names::KL_BOUND_FIXED => match schedule.kind {
                    ScheduleKind::Fixed { eta } => {
                        theorem_fixed_bound(k, self.exp.kl0.expect("kl0 resolved"), eta, &self.exp.constants)
                    }
                    ScheduleKind::Varying { .. } => continue,
                },
                names::KL_BOUND_VARYING => match schedule.kind {
                    ScheduleKind::Varying { k0 } if k >= k0 => theorem_varying_bound(k, k0, &self.exp.constants)?,
                    _ => continue,
                },
                names::KL_HIST1D => {
                    let coord = state.coordinate(self.config.hist_coord);
                    hist_kl_1d(&coord, self.reference_coord.as_ref().expect("reference"), self.config.n_bins)?
                }
                names::SLICED_W2 => {
                    let mut rng = aux_stream(self.config.master_seed, AuxTag::Projections);
                    sliced_w2(
                        state.positions(),
                        self.reference_full.as_ref().expect("reference"),
                        state.dim(),
                        self.config.n_projections,
                        &mut rng,
                    )?
                }
                names::COORD_VAR_BIAS => {
                    let target_var = self.analytic_target.as_ref().expect("analytic coords").var[0];
                    self.coord_var_bias(state, target_var)
                }
                other => unreachable!("unresolved metric {other}"),
            };
            out.push((metric, value));
        }
        Ok(out)
    }

    /// Mean over the analytic coordinates of (empirical variance − target
    /// variance).
    fn coord_var_bias(&self, state: &ChainState, target_var: f64) -> f64 {
        let coords = &self.exp.analytic_coords;
        let n = state.n_chains() as f64;
        if state.n_chains() < 2 {
            return f64::NAN;
        }
        let mut sum = vec![0.0; coords.len()];
        let mut sum_sq = vec![0.0; coords.len()];
        for row in state.positions().chunks_exact(state.dim()) {
            for (i, &j) in coords.iter().enumerate() {
                sum[i] += row[j];
                sum_sq[i] += row[j] * row[j];
            }
        }
        let bias: f64 = sum
            .iter()
            .zip(&sum_sq)
            .map(|(s, s2)| {
                let mean = s / n;
                (s2 - n * mean * mean) / (n - 1.0) - target_var
            })
            .sum();
        bias / coords.len() as f64
    }
}
