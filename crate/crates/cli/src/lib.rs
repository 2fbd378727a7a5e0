//! Batch experiment driver: parses a TOML configuration, runs one experiment
//! per subcommand, and writes reproducible CSV/JSON artifacts.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

use artifacts::ArtifactWriter;
use clap::{Parser, Subcommand};
use commands::SweepParam;
use config::ExperimentConfig;
use error::CliError;
use std::path::PathBuf;

/// Command line of the `tfstab` binary.
#[derive(Debug, Parser)]
#[command(name = "tfstab", version, about = "Stability experiments for the thin-film traveling wave")]
pub struct Cli {
    /// TOML configuration; defaults apply to every missing key.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weighted coercivity ranges of the canonical operators.
    Coercivity,
    /// Weighted and composite norms of a sampled function.
    Norms {
        /// CSV with columns `s` (or `x`) and a value; defaults to the configured perturbation.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Resolvent solve `(λ + 𝒜)u = g`.
    Resolvent {
        /// Spectral parameter; defaults to every `solver.lambdas` entry.
        #[arg(long)]
        lambda: Option<f64>,
        /// Right-hand side CSV on the configured grid; defaults to a manufactured problem.
        #[arg(long)]
        g: Option<PathBuf>,
    },
    /// Linear evolution of the configured perturbation.
    LinearEvolve,
    /// Nonlinear evolution of the configured perturbation.
    NonlinearEvolve,
    /// Oracle suite with a pass/fail report.
    Validate,
    /// Parameter sweep on a worker pool.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
    },
}

/// Runs one subcommand and returns its stdout text.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.display().to_string();
    }
    cfg.validate()?;
    let mut w = ArtifactWriter::new(std::path::Path::new(&cfg.output.dir), &cfg)?;
    let out = match &cli.command {
        Command::Coercivity => commands::coercivity(&mut w),
        Command::Norms { input } => commands::norms(&cfg, &mut w, input.as_deref()),
        Command::Resolvent { lambda, g } => commands::resolvent(&cfg, &mut w, *lambda, g.as_deref()),
        Command::LinearEvolve => commands::linear_evolve(&cfg, &mut w),
        Command::NonlinearEvolve => commands::nonlinear_evolve(&cfg, &mut w),
        Command::Validate => commands::validate(&cfg, &mut w),
        Command::Sweep { param, values } => commands::sweep(&cfg, &mut w, *param, values),
    };
    w.finish()?;
    out
}
