//! `rbound`: bounds, dominance checks and horizons for retarded integral
//! inequalities.
//!
//! Exit codes: 0 ok, 1 invalid configuration or hypotheses, 2 dominance
//! failure, 3 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod presets;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;
use config::{Overrides, RunConfig, Settings};

#[derive(Parser)]
#[command(
    name = "rbound",
    version,
    about = "A priori bounds for retarded integral inequalities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Named instance: gronwall, blowup, lipovan, sun21, sun22, log.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    /// CSV output file; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Seed of a generated instance, or the first seed of a batch.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Number of batch seeds.
    #[arg(long, global = true, value_name = "N")]
    seeds: Option<u64>,

    /// Number of output grid nodes.
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,

    /// Relative slack of the dominance check.
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,

    /// Multiply the bound before checking dominance (self-test).
    #[arg(long, global = true, value_name = "X")]
    scale_bound: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Tabulate the bound on the output grid.
    Bound,
    /// Compare the bound against the equality-case solution.
    Verify,
    /// Report the validity horizon.
    Tau,
    /// Verify a range of generated instances.
    Batch,
}

fn settings(cli: &Cli) -> Result<Settings, Failure> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(Failure::config)?,
        None => RunConfig::default(),
    };
    let ov = Overrides {
        preset: cli.preset.clone(),
        out: cli.out.clone(),
        seed: cli.seed,
        seeds: cli.seeds,
        grid: cli.grid,
        tol: cli.tol,
        scale_bound: cli.scale_bound,
    };
    Settings::resolve(cfg, ov).map_err(Failure::config)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let s = settings(cli)?;
    match cli.command {
        Command::Bound => commands::bound(&s),
        Command::Verify => commands::verify(&s),
        Command::Tau => commands::tau(&s),
        Command::Batch => commands::batch(&s),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(commands::EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message.trim_end());
            ExitCode::from(f.code)
        }
    }
}
