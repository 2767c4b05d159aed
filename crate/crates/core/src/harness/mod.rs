//! Experiment plumbing: JSON configs, runs and sweeps with metric
//! collection, validation suites, CSV output.

pub mod config;
pub mod run;
pub mod validate;

pub use config::{ExperimentConfig, SweepAxis};
pub use run::{cmd_run, cmd_sweep, execute, write_csv, ExperimentRecord, RunOptions};
pub use validate::{run_suite, Check};

use crate::error::{Error, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SAMPLER_THREADS";

/// Shortest scientific form with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Configures the global rayon pool from `SAMPLER_THREADS`, if set.
/// Results do not depend on the thread count.
pub fn init_threads_from_env() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}
