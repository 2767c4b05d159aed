//! JSON experiment configuration and its resolution into runnable objects.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::{gaussian_kl, names, GaussianMoments, DEFAULT_BINS};
use crate::sampler::{Sampler, ScheduleSpec};
use crate::targets::{GaussianMixtureTarget, Potential, QuadraticTarget, TargetConstants, TargetModel, DEFAULT_MIXTURE_ALPHA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetConfig,
    pub sampler: SamplerName,
    pub schedule: ScheduleConfig,
    pub n_chains: usize,
    pub n_steps: u64,
    pub metric_every: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "InitConfig::is_default")]
    pub init: InitConfig,
    #[serde(default, skip_serializing_if = "ConstantOverrides::is_empty")]
    pub constants: ConstantOverrides,
    /// Metric names to emit; defaults depend on target and sampler.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<String>>,
    #[serde(default = "default_bins")]
    pub n_bins: usize,
    #[serde(default = "default_projections")]
    pub n_projections: usize,
    /// Coordinate tracked by `kl_hist1d`.
    #[serde(default)]
    pub hist_coord: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn default_projections() -> usize {
    32
}

fn default_m() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    DEFAULT_MIXTURE_ALPHA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetConfig {
    Quadratic {
        lambda: f64,
        dim: usize,
        #[serde(default = "default_m")]
        m: f64,
    },
    Mixture {
        /// Inline `K × d` means.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        means: Option<Vec<Vec<f64>>>,
        /// CSV file of K rows × d columns, no header. Relative paths are
        /// resolved against the config file's directory.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        means_csv: Option<PathBuf>,
        #[serde(default = "default_alpha")]
        alpha_star: f64,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct QuadraticFields {
    lambda: f64,
    dim: usize,
    m: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct MixtureFields {
    means: Option<Vec<Vec<f64>>>,
    means_csv: Option<PathBuf>,
    alpha_star: Option<f64>,
}

fn path_checked<T: serde::de::DeserializeOwned>(value: serde_json::Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        if path == "." || path.is_empty() {
            match prefix.trim_end_matches('.') {
                "" => Error::Config(e.into_inner().to_string()),
                owner => Error::Config(format!("{owner}: {}", e.into_inner())),
            }
        } else {
            Error::Config(format!("{prefix}{path}: {}", e.into_inner()))
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerName {
    Lapd,
    Ula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleName {
    Fixed,
    Varying,
}

impl ScheduleName {
    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleName::Fixed => "fixed",
            ScheduleName::Varying => "varying",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kind: ScheduleName,
    /// Target accuracy for the fixed rule's `η̂`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Explicit fixed step; defaults to `η̂(ε)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// `KL(p̃₀ ‖ p∗)` or an upper estimate. Computed exactly for quadratic
    /// targets when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kl0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    pub mean: f64,
    pub std: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self { mean: 0.0, std: 1.0 }
    }
}

impl InitConfig {
    fn is_default(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_star: Option<f64>,
}

impl ConstantOverrides {
    fn is_empty(&self) -> bool {
        self.m.is_none() && self.alpha_star.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<ScheduleName>>,
}

impl ExperimentConfig {
    /// Parses a JSON document. Errors carry the path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        // The tagged target is buffered by serde, which loses field paths;
        // check its fields first so errors still name them.
        if let Some(target) = value.get("target").and_then(|t| t.as_object()) {
            let mut fields = target.clone();
            let kind = fields.remove("kind");
            let fields = serde_json::Value::Object(fields);
            match kind.as_ref().and_then(|k| k.as_str()) {
                Some("quadratic") => drop(path_checked::<QuadraticFields>(fields, "target.")?),
                Some("mixture") => drop(path_checked::<MixtureFields>(fields, "target.")?),
                _ => {}
            }
        }
        path_checked::<Self>(value, "")
    }

    /// Reads a config file. Relative `means_csv` paths are made absolute
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        if let TargetConfig::Mixture { means_csv: Some(csv), .. } = &mut config.target {
            if csv.is_relative() {
                let base = path.parent().unwrap_or_else(|| Path::new("."));
                *csv = base.join(&*csv);
            }
        }
        Ok(config)
    }

    /// Hex digest of the canonical (sorted-key, compact) JSON of everything
    /// that determines the sampled law: seed and output location excluded.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.master_seed = 0;
        canonical.output_path = None;
        canonical.sweep = None;
        let text = canonical_json(&canonical);
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Reads K rows of comma-separated floats, no header.
pub fn read_means_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("target.means_csv: {e}")))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Config(format!("target.means_csv: {e}")))?;
        let row = record
            .iter()
            .map(|field| field.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("target.means_csv row {}: {e}", i + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Everything needed to execute one run.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub target: TargetModel,
    pub constants: TargetConstants,
    pub sampler: Sampler,
    pub init: InitConfig,
    /// `KL(p̃₀ ‖ p∗)`, exact or user-supplied.
    pub kl0: Option<f64>,
    pub metrics: Vec<&'static str>,
    /// Coordinates tracked exactly by the Gaussian recursion.
    pub analytic_coords: Vec<usize>,
}

impl ResolvedExperiment {
    pub fn dim(&self) -> usize {
        self.target.dim()
    }
}

fn invariant(msg: impl Into<String>) -> Error {
    Error::Invariant(msg.into())
}

fn mixture_means(means: &Option<Vec<Vec<f64>>>, means_csv: &Option<PathBuf>) -> Result<Vec<Vec<f64>>> {
    match (means, means_csv) {
        (Some(m), None) => Ok(m.clone()),
        (None, Some(path)) => read_means_csv(path),
        (Some(_), Some(_)) => Err(Error::Config("target: give either `means` or `means_csv`, not both".into())),
        (None, None) => Err(Error::Config("target: missing field `means` (or `means_csv`)".into())),
    }
}

/// Resolves a parsed config: builds the target, checks invariants and fixes
/// the schedule, initial KL and metric list.
pub fn resolve(config: &ExperimentConfig) -> Result<ResolvedExperiment> {
    if config.n_chains < 1 {
        return Err(invariant("n_chains must be >= 1"));
    }
    if config.metric_every < 1 {
        return Err(invariant("metric_every must be >= 1"));
    }
    if let Some(m) = config.constants.m {
        if !(m > 0.0 && m.is_finite()) {
            return Err(invariant("constants.m must be > 0"));
        }
    }
    if let Some(a) = config.constants.alpha_star {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invariant("constants.alpha_star must be > 0"));
        }
    }
    let init = config.init;
    if !(init.std > 0.0 && init.std.is_finite() && init.mean.is_finite()) {
        return Err(invariant("init.std must be > 0 and init.mean finite"));
    }

    let target = match &config.target {
        TargetConfig::Quadratic { lambda, dim, m } => {
            let m = config.constants.m.unwrap_or(*m);
            let mut q = QuadraticTarget::new(*lambda, *dim, m)?;
            if let Some(a) = config.constants.alpha_star {
                q = q.with_alpha_star(a)?;
            }
            TargetModel::Quadratic(q)
        }
        TargetConfig::Mixture { means, means_csv, alpha_star } => {
            if let Some(m) = config.constants.m {
                if m != 1.0 {
                    return Err(invariant("constants.m must equal 1 for a mixture target"));
                }
            }
            let alpha = config.constants.alpha_star.unwrap_or(*alpha_star);
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(invariant("constants.alpha_star must be > 0"));
            }
            TargetModel::Mixture(GaussianMixtureTarget::new(mixture_means(means, means_csv)?, alpha)?)
        }
    };
    let dim = target.dim();
    let constants = target.constants();
    constants.validate(dim)?;

    let analytic_coords = match &target {
        TargetModel::Quadratic(q) => (0..q.dim).collect(),
        TargetModel::Mixture(mix) => mix.prior_only_coords(),
    };

    let kl0 = match (&target, config.schedule.kl0) {
        (_, Some(kl0)) => {
            if !(kl0 >= 0.0 && kl0.is_finite()) {
                return Err(invariant("schedule.kl0 must be >= 0"));
            }
            Some(kl0)
        }
        (TargetModel::Quadratic(q), None) => {
            let p = GaussianMoments::isotropic(dim, init.mean, init.std * init.std)?;
            let t = GaussianMoments::isotropic(dim, 0.0, q.target_var())?;
            Some(gaussian_kl(&p, &t)?)
        }
        (TargetModel::Mixture(_), None) => None,
    };

    let sched = &config.schedule;
    let schedule = match sched.kind {
        ScheduleName::Fixed => {
            if let Some(eps) = sched.epsilon {
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(invariant("schedule.epsilon must be > 0"));
                }
            }
            match (sched.eta, sched.epsilon) {
                (Some(eta), eps) => {
                    if !(eta > 0.0 && eta.is_finite()) {
                        return Err(invariant("schedule.eta must be > 0"));
                    }
                    ScheduleSpec::fixed_eta(constants, eta, eps)?
                }
                (None, Some(eps)) => ScheduleSpec::fixed(constants, eps)?,
                (None, None) => {
                    return Err(Error::Config(
                        "schedule: missing field `epsilon` (or `eta`) for the fixed schedule".into(),
                    ))
                }
            }
        }
        ScheduleName::Varying => {
            let kl0 = kl0.ok_or_else(|| {
                Error::Config("schedule: missing field `kl0` for the varying schedule".into())
            })?;
            ScheduleSpec::varying(constants, kl0)?
        }
    };
    let sampler = match config.sampler {
        SamplerName::Lapd => {
            if !schedule.within_guarantee() {
                return Err(invariant(format!(
                    "schedule.eta must be <= eta_hat = {:e} for the prior-diffusion sampler",
                    schedule.eta_hat
                )));
            }
            Sampler::Lapd(schedule)
        }
        SamplerName::Ula => Sampler::Ula(schedule),
    };

    let metrics = resolve_metrics(config, &target, &sampler, kl0, &analytic_coords)?;
    Ok(ResolvedExperiment { target, constants, sampler, init, kl0, metrics, analytic_coords })
}

fn resolve_metrics(
    config: &ExperimentConfig,
    target: &TargetModel,
    sampler: &Sampler,
    kl0: Option<f64>,
    analytic_coords: &[usize],
) -> Result<Vec<&'static str>> {
    let is_lapd = matches!(sampler, Sampler::Lapd(_));
    let fixed = sampler.schedule().k0().is_none();
    let available = |name: &str| -> std::result::Result<(), String> {
        match name {
            names::KL_EXACT | names::COORD_VAR_BIAS if analytic_coords.is_empty() => {
                Err(format!("{name} needs a quadratic target or prior-only coordinates"))
            }
            names::KL_BOUND_FIXED if !(is_lapd && fixed) => {
                Err(format!("{name} applies to the prior-diffusion sampler with a fixed schedule"))
            }
            names::KL_BOUND_VARYING if !(is_lapd && !fixed) => {
                Err(format!("{name} applies to the prior-diffusion sampler with a varying schedule"))
            }
            names::KL_BOUND_FIXED if kl0.is_none() => Err(format!("{name} needs schedule.kl0")),
            names::KL_HIST1D if config.hist_coord >= target.dim() => {
                Err("hist_coord is out of range".to_string())
            }
            _ => Ok(()),
        }
    };
    match &config.metrics {
        Some(list) => {
            if config.n_bins < 2 {
                return Err(invariant("n_bins must be >= 2"));
            }
            if config.n_projections < 1 {
                return Err(invariant("n_projections must be >= 1"));
            }
            let mut out = Vec::new();
            for name in list {
                let known = names::ALL
                    .iter()
                    .find(|n| **n == name.as_str())
                    .ok_or_else(|| Error::Config(format!("metrics: unknown metric `{name}`")))?;
                available(known).map_err(|msg| invariant(format!("metrics: {msg}")))?;
                if !out.contains(known) {
                    out.push(*known);
                }
            }
            Ok(out)
        }
        None => {
            let mut defaults = vec![names::KL_EXACT, names::KL_BOUND_FIXED, names::KL_BOUND_VARYING];
            if matches!(target, TargetModel::Mixture(_)) {
                defaults.push(names::KL_HIST1D);
            }
            defaults.push(names::COORD_VAR_BIAS);
            Ok(defaults.into_iter().filter(|n| available(n).is_ok()).collect())
        }
    }
}

/// Sweep axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Dimension,
    Eta,
    Schedule,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dimension" => Ok(SweepAxis::Dimension),
            "eta" => Ok(SweepAxis::Eta),
            "schedule" => Ok(SweepAxis::Schedule),
            other => Err(Error::Config(format!(
                "unknown sweep axis `{other}` (expected dimension, eta or schedule)"
            ))),
        }
    }
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Dimension => "dimension",
            SweepAxis::Eta => "eta",
            SweepAxis::Schedule => "schedule",
        }
    }
}

/// One config per axis value, paired with the `axis_value` column text.
pub fn expand_sweep(config: &ExperimentConfig, axis: SweepAxis) -> Result<Vec<(String, ExperimentConfig)>> {
    let sweep = config.sweep.clone().unwrap_or_default();
    let missing = || Error::Config(format!("sweep.{} must list at least one value", axis.as_str()));
    let mut base = config.clone();
    base.sweep = None;
    match axis {
        SweepAxis::Dimension => {
            let dims = sweep.dimension.filter(|v| !v.is_empty()).ok_or_else(missing)?;
            dims.into_iter().map(|d| Ok((d.to_string(), with_dimension(&base, d)?))).collect()
        }
        SweepAxis::Eta => {
            let etas = sweep.eta.filter(|v| !v.is_empty()).ok_or_else(missing)?;
            Ok(etas
                .into_iter()
                .map(|eta| {
                    let mut c = base.clone();
                    c.schedule.kind = ScheduleName::Fixed;
                    c.schedule.eta = Some(eta);
                    (super::format_float(eta), c)
                })
                .collect())
        }
        SweepAxis::Schedule => {
            let kinds = sweep.schedule.filter(|v| !v.is_empty()).ok_or_else(missing)?;
            Ok(kinds
                .into_iter()
                .map(|kind| {
                    let mut c = base.clone();
                    c.schedule.kind = kind;
                    (kind.as_str().to_string(), c)
                })
                .collect())
        }
    }
}

/// Re-dimensions a config. Mixture means are zero-padded (or truncated where
/// they are zero), which keeps every pairwise difference and hence `Tr(H)`.
pub fn with_dimension(config: &ExperimentConfig, dim: usize) -> Result<ExperimentConfig> {
    if dim == 0 {
        return Err(invariant("sweep.dimension values must be >= 1"));
    }
    let mut out = config.clone();
    out.target = match &config.target {
        TargetConfig::Quadratic { lambda, m, .. } => TargetConfig::Quadratic { lambda: *lambda, dim, m: *m },
        TargetConfig::Mixture { means, means_csv, alpha_star } => {
            let rows = mixture_means(means, means_csv)?;
            let padded = rows
                .into_iter()
                .map(|mut row| {
                    if row.len() > dim {
                        if row[dim..].iter().any(|&x| x != 0.0) {
                            return Err(invariant(format!(
                                "sweep.dimension {dim} would drop non-zero mean coordinates"
                            )));
                        }
                        row.truncate(dim);
                    } else {
                        row.resize(dim, 0.0);
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            TargetConfig::Mixture { means: Some(padded), means_csv: None, alpha_star: *alpha_star }
        }
    };
    Ok(out)
}

/// Compact JSON of a config with object keys sorted at every level.
pub fn canonical_json(config: &ExperimentConfig) -> String {
    fn sorted(v: serde_json::Value) -> serde_json::Value {
        match v {
            serde_json::Value::Object(map) => {
                let mut entries: Vec<_> = map.into_iter().collect();
                entries.sort_by(|a, b| a.0.cmp(&b.0));
                serde_json::Value::Object(entries.into_iter().map(|(k, v)| (k, sorted(v))).collect())
            }
            serde_json::Value::Array(items) => serde_json::Value::Array(items.into_iter().map(sorted).collect()),
            other => other,
        }
    }
    let value = serde_json::to_value(config).expect("config serializes");
    serde_json::to_string(&sorted(value)).expect("value serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_json() -> &'static str {
        r#"{
            "target": {"kind": "quadratic", "lambda": 1.0, "dim": 4},
            "sampler": "lapd",
            "schedule": {"kind": "fixed", "epsilon": 0.1},
            "n_chains": 100, "n_steps": 10, "metric_every": 5
        }"#
    }

    #[test]
    fn parses_and_resolves_quadratic() {
        let c = ExperimentConfig::from_json(quadratic_json()).unwrap();
        let r = resolve(&c).unwrap();
        assert_eq!(r.dim(), 4);
        assert_eq!(r.metrics, vec![names::KL_EXACT, names::KL_BOUND_FIXED, names::COORD_VAR_BIAS]);
        // KL(N(0, I₄) ‖ N(0, ½ I₄)) = 4 · ½(2 − 1 − ln 2).
        assert!((r.kl0.unwrap() - 2.0 * (1.0 - 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn parse_errors_name_the_field() {
        let err = ExperimentConfig::from_json(r#"{"target": {"kind": "quadratic", "lambda": "x", "dim": 2}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("target.lambda"), "{err}");
        let err = ExperimentConfig::from_json(
            r#"{"target": {"kind": "quadratic", "lambda": 1, "dim": 2}, "sampler": "lapd",
                "schedule": {"kind": "fixed", "epsilon": 0.1}, "n_steps": 1, "metric_every": 1}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("n_chains"), "{err}");
    }

    #[test]
    fn corrupted_prior_is_an_invariant_violation() {
        let text = r#"{
            "target": {"kind": "mixture", "means": [[1.0, 0.0], [-1.0, 0.0]]},
            "constants": {"m": -1.0},
            "sampler": "lapd", "schedule": {"kind": "fixed", "epsilon": 0.1},
            "n_chains": 10, "n_steps": 1, "metric_every": 1
        }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        match resolve(&c) {
            Err(Error::Invariant(msg)) => assert_eq!(msg, "constants.m must be > 0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dimension_padding_preserves_trace() {
        let text = r#"{
            "target": {"kind": "mixture", "means": [[1.0], [-1.0]]},
            "sampler": "lapd", "schedule": {"kind": "varying", "kl0": 0.2},
            "n_chains": 10, "n_steps": 1, "metric_every": 1,
            "sweep": {"dimension": [2, 8, 32, 128]}
        }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        let runs = expand_sweep(&c, SweepAxis::Dimension).unwrap();
        assert_eq!(runs.len(), 4);
        for (label, cfg) in &runs {
            let r = resolve(cfg).unwrap();
            assert_eq!(r.dim().to_string(), *label);
            assert_eq!(r.constants.tr_h, 16.0);
            assert_eq!(r.analytic_coords.len(), r.dim() - 1);
        }
        let hashes: std::collections::BTreeSet<_> = runs.iter().map(|(_, c)| c.config_hash()).collect();
        assert_eq!(hashes.len(), 4);
    }

    #[test]
    fn empty_or_missing_axis_is_a_config_error() {
        let mut c = ExperimentConfig::from_json(quadratic_json()).unwrap();
        assert!(matches!(expand_sweep(&c, SweepAxis::Eta), Err(Error::Config(_))));
        c.sweep = Some(SweepConfig { eta: Some(vec![]), ..Default::default() });
        assert!(matches!(expand_sweep(&c, SweepAxis::Eta), Err(Error::Config(_))));
        assert!(matches!("bogus".parse::<SweepAxis>(), Err(Error::Config(_))));
    }

    #[test]
    fn hash_ignores_seed_and_output() {
        let a = ExperimentConfig::from_json(quadratic_json()).unwrap();
        let mut b = a.clone();
        b.master_seed = 99;
        b.output_path = Some("x.csv".into());
        assert_eq!(a.config_hash(), b.config_hash());
        b.n_steps += 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 16);
        assert!(canonical_json(&a).starts_with("{\"hist_coord\""));
    }

    #[test]
    fn lapd_step_above_eta_hat_is_rejected() {
        let mut c = ExperimentConfig::from_json(quadratic_json()).unwrap();
        c.schedule.eta = Some(1.0);
        assert!(matches!(resolve(&c), Err(Error::Invariant(_))));
        c.sampler = SamplerName::Ula;
        assert!(resolve(&c).is_ok());
    }

    #[test]
    fn means_csv_is_read_relative_to_the_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("means.csv"), "1.0, 0.0\n-1.0,0.0\n").unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(
            &cfg,
            r#"{"target": {"kind": "mixture", "means_csv": "means.csv"}, "sampler": "ula",
                "schedule": {"kind": "fixed", "eta": 0.01}, "n_chains": 3, "n_steps": 0, "metric_every": 1}"#,
        )
        .unwrap();
        let r = resolve(&ExperimentConfig::load(&cfg).unwrap()).unwrap();
        match r.target {
            TargetModel::Mixture(m) => assert_eq!(m.mean(1), &[-1.0, 0.0]),
            _ => unreachable!(),
        }
    }
}
