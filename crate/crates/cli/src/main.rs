use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lapd::harness::{self, RunOptions, SweepAxis};
use lapd::Error;

/// Langevin sampling experiments: runs, sweeps and validation suites.
#[derive(Parser)]
#[command(name = "sampler", version)]
struct Cli {
    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write CSV here instead of the config's output path (or stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its metric records as CSV.
    Run {
        config: PathBuf,
        /// Overwrite an existing output file.
        #[arg(long)]
        force: bool,
    },
    /// Run one experiment per value listed under `sweep.<axis>` in the config.
    Sweep {
        config: PathBuf,
        /// dimension, eta or schedule.
        #[arg(long)]
        axis: String,
        #[arg(long)]
        force: bool,
    },
    /// Run an invariant suite: kernel, gradients, schedules or oracle.
    Validate { suite: String },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Invariant(_) => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    harness::init_threads_from_env()?;
    let opts = |force| RunOptions { seed: cli.seed, output: cli.out.clone(), force };
    match &cli.command {
        Command::Run { config, force } => {
            harness::cmd_run(config, &opts(*force))?;
            Ok(true)
        }
        Command::Sweep { config, axis, force } => {
            let axis: SweepAxis = axis.parse()?;
            harness::cmd_sweep(config, axis, &opts(*force))?;
            Ok(true)
        }
        Command::Validate { suite } => {
            let checks = harness::run_suite(suite)?;
            for check in &checks {
                println!("{check}");
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
