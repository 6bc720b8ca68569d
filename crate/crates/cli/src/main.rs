//! `tradetherm`: file-based front end for trading-cost analysis.
//!
//! Every run is described by one config file; flags override individual
//! entries and the output always echoes the resolved configuration. Exit
//! codes: 0 success, 2 invalid configuration or arguments, 3 runtime or
//! numerical failure. Progress goes to stderr, results to `out` or stdout.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "tradetherm",
    version,
    about = "Dissipation bounds, P&L simulation, and strategy ensembles for price-impact models"
)]
struct Cli {
    /// Run configuration file (flat `key = value` lines).
    #[arg(long, value_name = "PATH", global = true)]
    config: Option<PathBuf>,

    /// Override the command's seed (sim.seed, or pipeline.seed for pipeline).
    #[arg(long, value_name = "N", global = true)]
    seed: Option<u64>,

    /// Override the output path (`out` key).
    #[arg(long, value_name = "PATH", global = true)]
    out: Option<PathBuf>,

    /// Override the output format (`format` key).
    #[arg(long, global = true, value_parser = ["json", "csv"])]
    format: Option<String>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form round-trip statistics: work, variance, loss bounds.
    Analyze,
    /// Monte Carlo P&L simulation of the configured strategy.
    Simulate,
    /// Gibbs states over a works CSV at one or more inverse temperatures.
    Ensemble,
    /// Fit the inverse temperature to observed strategy counts.
    Calibrate,
    /// Synthetic tapes -> impact curve, convexity, estimators, bound report.
    Pipeline,
    /// Closed-form statistics swept over one parameter; emits a table.
    Sweep,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Analyze => "analyze",
            Cmd::Simulate => "simulate",
            Cmd::Ensemble => "ensemble",
            Cmd::Calibrate => "calibrate",
            Cmd::Pipeline => "pipeline",
            Cmd::Sweep => "sweep",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::config("missing --config PATH".into()))?;
    let mut cfg = Config::load(path)?;

    if let Some(seed) = cli.seed {
        match cli.command {
            Cmd::Simulate => cfg.override_entry("sim.seed", seed.to_string()),
            Cmd::Pipeline => cfg.override_entry("pipeline.seed", seed.to_string()),
            _ => eprintln!("note: --seed has no effect on `{}`", cli.command.name()),
        }
    }
    if let Some(out) = &cli.out {
        cfg.override_entry("out", out.display().to_string());
    }
    if let Some(format) = &cli.format {
        cfg.override_entry("format", format.clone());
    }

    commands::run(cli.command.name(), &cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
