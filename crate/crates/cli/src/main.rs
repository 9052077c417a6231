//! `lindblad-osc`: trajectories, steady states, density matrices,
//! quasiprobability grids, model checks and parameter sweeps for the damped
//! quantum harmonic oscillator.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{StrictViolation, EXIT_NO_STEADY_STATE, EXIT_STRICT, EXIT_USAGE};
use config::FileConfig;

#[derive(Debug, Parser)]
#[command(name = "lindblad-osc", version, about = "Damped quantum harmonic oscillator under the Lindblad master equation")]
struct Cli {
    /// JSON run file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (LINDBLAD_OSC_JOBS takes precedence).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form moment trajectory as CSV, optionally checked against the
    /// truncated number-basis integrator.
    Simulate(commands::simulate::SimulateArgs),
    /// Steady-state covariances, energy and representation covariances as JSON.
    Steady(commands::steady::SteadyArgs),
    /// Number-basis density matrix as JSON.
    #[command(alias = "density")]
    DensityMatrix(commands::density::DensityArgs),
    /// P, Wigner or Q distribution on a uniform grid as CSV.
    Distribution(commands::distribution::DistributionArgs),
    /// Complete-positivity report for a catalog model or explicit parameters.
    Validate(commands::validate::ValidateArgs),
    /// Steady-state summary over a grid of (lambda, mu, temperature).
    Sweep(commands::sweep::SweepArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = config::resolve_jobs(cli.jobs)? {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let file = FileConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Simulate(a) => commands::simulate::run(a, &file),
        Command::Steady(a) => commands::steady::run(a, &file),
        Command::DensityMatrix(a) => commands::density::run(a, &file),
        Command::Distribution(a) => commands::distribution::run(a, &file),
        Command::Validate(a) => commands::validate::run(a, &file),
        Command::Sweep(a) => commands::sweep::run(a, &file),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<StrictViolation>().is_some() {
            return EXIT_STRICT;
        }
        if let Some(lindblad_osc::Error::NoSteadyState { .. }) = cause.downcast_ref::<lindblad_osc::Error>() {
            return EXIT_NO_STEADY_STATE;
        }
    }
    EXIT_USAGE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
