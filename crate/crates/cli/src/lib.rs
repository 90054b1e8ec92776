//! Experiment runner for the Grover-style TSP heuristic: configuration,
//! commands and key/value reports.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use commands::{cmd_compare, cmd_sweep, execute, CompareSummary, SweepCell};
pub use config::{ExperimentConfig, Kind, Overrides};
pub use report::RunReport;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: invalid `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Core(#[from] qtsp_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for bad configuration or parameters, 3 for resource limits, 1
    /// otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Core(qtsp_core::Error::InvalidParameter { .. })
            | CliError::Core(qtsp_core::Error::Parse { .. }) => 2,
            CliError::Core(qtsp_core::Error::ResourceLimit { .. }) => 3,
            CliError::Core(qtsp_core::Error::MomentDiscrepancy { .. }) => 1,
            CliError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qtsp", about = "Grover-style TSP heuristic simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random instance
    Gen(Overrides),
    /// Enumerate tours and report cost and phase statistics
    Stats(Overrides),
    /// Simulate the quantum search
    RunQuantum(Overrides),
    /// Run the random-sampling baseline
    RunClassical(Overrides),
    /// Quantum and classical side by side
    Compare(Overrides),
    /// Compare over a grid of city counts and seeds
    Sweep(Overrides),
}

impl Command {
    fn split(&self) -> (Kind, &Overrides) {
        match self {
            Command::Gen(o) => (Kind::Gen, o),
            Command::Stats(o) => (Kind::Stats, o),
            Command::RunQuantum(o) => (Kind::RunQuantum, o),
            Command::RunClassical(o) => (Kind::RunClassical, o),
            Command::Compare(o) => (Kind::Compare, o),
            Command::Sweep(o) => (Kind::Sweep, o),
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (kind, ov) = cli.command.split();
    let result = ExperimentConfig::resolve(kind, ov).and_then(|cfg| {
        let r = execute(&cfg)?;
        Ok((cfg, r))
    });
    match result {
        Ok((cfg, r)) => {
            print!("{}", r.render());
            println!("output={}", cfg.out.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
