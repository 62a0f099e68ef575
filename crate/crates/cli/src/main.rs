//! `superpose`: solve superposition problems, run experiment sweeps and
//! estimate cone geometry from JSON configs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime failure.

mod commands;
mod error;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::RunOptions;

#[derive(Parser)]
#[command(name = "superpose", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one constrained problem and write result.json.
    Solve(Common),
    /// Run a trial sweep and write CSV records plus a gnuplot script.
    Experiment(Common),
    /// Print a Gaussian width estimate.
    Width(Common),
    /// Print sampled structural coherence estimates.
    ScEstimate(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for experiment sweeps.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Record per-trial wall time (makes CSV output non-reproducible).
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (run, common): (fn(&RunOptions) -> error::CliResult<String>, &Common) = match &cli.command {
        Command::Solve(c) => (commands::solve, c),
        Command::Experiment(c) => (commands::experiment, c),
        Command::Width(c) => (commands::width, c),
        Command::ScEstimate(c) => (commands::sc_estimate, c),
    };
    let opts = RunOptions {
        config: &common.config,
        out: &common.out,
        seed: common.seed,
        threads: common.threads.map(|t| t as usize),
        timing: common.timing,
    };
    match run(&opts) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("superpose: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
