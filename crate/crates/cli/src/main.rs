//! `trolleypose` command-line front end.

mod config;
mod error;
mod estimate;
mod manifest;
mod simulate;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

/// Ground-constrained trolley pose estimation: simulate, estimate, sweep.
///
/// Exit status: 0 on success, 1 on I/O failure, 2 on invalid input.
/// Log level comes from TROLLEYPOSE_LOG (error, warn, info, debug, trace).
#[derive(Debug, Parser)]
#[command(name = "trolleypose", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a synthetic scenario and write frames.csv, summary.json and
    /// manifest.json.
    Simulate {
        /// Scenario config, or a directory of them (one output subdirectory
        /// per file).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `scenario.rng_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Fail when the first frames have no usable keypoints.
        #[arg(long)]
        strict: bool,
        /// Also write the synthetic detections as detections.jsonl.
        #[arg(long)]
        detections: bool,
    },
    /// Estimate poses from recorded detections, one JSON object per line.
    Estimate {
        /// Pipeline config.
        #[arg(long)]
        config: PathBuf,
        /// Detections JSONL; `-` or omitted reads standard input.
        #[arg(default_value = "-")]
        detections: PathBuf,
        /// Fail when the first frames have no usable keypoints.
        #[arg(long)]
        strict: bool,
        /// Emit planner goals (radians) instead of pose estimates.
        #[arg(long)]
        goals: bool,
    },
    /// Tabulate orientation decoding error against bin count.
    SweepBins {
        #[arg(long)]
        config: PathBuf,
        /// Write sweep.csv and manifest.json here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `rng_seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TROLLEYPOSE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result: Result<(), CliError> = match &cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            strict,
            detections,
        } => simulate::run(&simulate::SimulateArgs {
            config,
            out,
            seed: *seed,
            strict: *strict,
            detections: *detections,
        }),
        Command::Estimate {
            config,
            detections,
            strict,
            goals,
        } => estimate::run(&estimate::EstimateArgs {
            config,
            detections,
            strict: *strict,
            goals: *goals,
        }),
        Command::SweepBins { config, out, seed } => sweep::run(&sweep::SweepArgs {
            config,
            out: out.as_deref(),
            seed: *seed,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
