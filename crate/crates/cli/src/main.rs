//! `antetomo` — command-line pipeline for antedated quantum tomography.
//!
//! Subcommands:
//!
//! * `simulate`    — run the protocol simulation, write a counts table;
//! * `reconstruct` — single-qubit state reconstruction from counts;
//! * `process`     — time-channel process tomography from counts;
//! * `report`      — summary table and plot-ready CSV from report files;
//! * `fixtures`    — dump the built-in reference matrices.
//!
//! Exit codes: 0 on success, 2 on validation failure, 3 on numerical
//! nonconvergence.

mod commands;
mod config;
mod reports;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use antetomo::antedate::BellGroup;

#[derive(Parser)]
#[command(
    name = "antetomo",
    version,
    about = "Antedated quantum tomography pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the protocol and write the aggregated counts table.
    Simulate {
        /// Experiment configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the seed from the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Reconstruct single-qubit states from a counts table.
    Reconstruct {
        /// Counts table produced by `simulate` (JSON list of rows).
        #[arg(long, required_unless_present = "config", conflicts_with = "config")]
        counts: Option<PathBuf>,
        /// Simulate internally from this configuration instead of reading
        /// a counts file; equivalent to `simulate` followed by
        /// `reconstruct --counts`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Data slice: phi+, phi-, or combined (unscrambled and pooled).
        #[arg(long, default_value = "combined", value_parser = parse_group)]
        group: BellGroup,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Bootstrap resamples for the error bars.
        #[arg(long, default_value_t = 100)]
        resamples: usize,
        /// Base seed for the bootstrap (defaults to the config seed, or 0
        /// when reading a counts file).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Reconstruct the per-branch time channels from a counts table.
    Process {
        /// Counts table produced by `simulate` (JSON list of rows).
        #[arg(long, required_unless_present = "config", conflicts_with = "config")]
        counts: Option<PathBuf>,
        /// Simulate internally from this configuration instead of reading
        /// a counts file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Bootstrap resamples for the error bars.
        #[arg(long, default_value_t = 100)]
        resamples: usize,
        /// Base seed for the bootstrap (defaults to the config seed, or 0
        /// when reading a counts file).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Summarize state/process reports into a table and a plot-data CSV.
    Report {
        /// Report files produced by `reconstruct` or `process`.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Output directory for the CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the built-in reference matrices with their provenance.
    Fixtures {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_group(s: &str) -> Result<BellGroup, String> {
    BellGroup::parse(s).map_err(|e| e.to_string())
}

/// Failures carry the exit code they map to.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: configuration, file contents, or request shape. Exit 2.
    Validation(String),
    /// An iterative estimator failed to converge or lost monotonicity.
    /// Exit 3.
    NonConvergence(String),
}

impl From<antetomo::Error> for CliError {
    fn from(e: antetomo::Error) -> Self {
        match e {
            antetomo::Error::NonMonotoneLikelihood { .. } => {
                CliError::NonConvergence(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out, seed } => commands::simulate(&config, &out, seed),
        Command::Reconstruct {
            counts,
            config,
            group,
            out,
            resamples,
            seed,
        } => commands::reconstruct(
            counts.as_deref(),
            config.as_deref(),
            group,
            &out,
            resamples,
            seed,
        ),
        Command::Process {
            counts,
            config,
            out,
            resamples,
            seed,
        } => commands::process(counts.as_deref(), config.as_deref(), &out, resamples, seed),
        Command::Report { files, out } => commands::report(&files, &out),
        Command::Fixtures { out } => commands::fixtures(&out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::NonConvergence(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
