//! `feller`: run configurations through the diffusion library and write CSV/JSON results.
//!
//! Exit codes: 0 success, 1 error (a JSON report with a module-qualified code goes to stderr),
//! 2 boundary data rejected by validation or a failed domain check.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "feller", version, about = "Diffusions on an interval with Feller boundary conditions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// First cell next to an accessible endpoint, as a fraction of the compact interval.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Grid nodes (analytic grid and oracle).
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    /// Resolvent parameters, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub r: Vec<f64>,
    /// Time horizon of recorded sample paths.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Boundary classes of both endpoints (classify.json).
    Classify,
    /// u, v and their s-derivatives on the grid (eigen_r<r>.csv).
    Eigen,
    /// Extended resolvent R_r g (resolve_r<r>.csv and .json).
    Resolve(ResolveArgs),
    /// Sample paths (paths.csv) and Monte Carlo estimates (estimates.json).
    Simulate(SimulateArgs),
    /// Generator-domain membership of R_r g, or of the [candidate] f (domain.json).
    CheckDomain,
    /// Check the boundary data against the classes (validation.json).
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Analytic,
    Grid,
}

#[derive(Debug, Clone, Args)]
pub struct ResolveArgs {
    /// Primary solution written to the CSV.
    #[arg(long, value_enum, default_value = "analytic")]
    pub oracle: OracleKind,
    /// Also solve with the finite-difference oracle and compare at the x0 points.
    #[arg(long)]
    pub also_oracle: bool,
    /// Also estimate by Monte Carlo and compare at the x0 points.
    #[arg(long)]
    pub also_mc: bool,
    /// Also write the minimal resolvent R⁰_r g (minimal_r<r>.csv).
    #[arg(long)]
    pub minimal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Skeleton,
    Paths,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Number of sample paths written to paths.csv.
    #[arg(long)]
    pub record: Option<usize>,
    #[arg(long, value_enum, default_value = "skeleton")]
    pub method: MethodArg,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}{}: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Config { path: String, line: Option<usize>, message: String },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] feller_core::Error),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "cli::ConfigError",
            CliError::Io(_) => "cli::IoError",
            CliError::Core(e) => e.code(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(feller_core::Error::Boundary(feller_core::boundary::BoundaryError::InvalidBoundaryData(_))) => 2,
            _ => 1,
        }
    }

    pub fn report(&self) -> serde_json::Value {
        let line = match self {
            CliError::Config { line, .. } => *line,
            _ => None,
        };
        json!({ "error": { "code": self.code(), "message": self.to_string(), "line": line } })
    }
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}

from_core!(
    feller_core::scale::ScaleSpeedError,
    feller_core::eigen::EigenError,
    feller_core::minimal::MinimalError,
    feller_core::boundary::BoundaryError,
    feller_core::oracle::OracleError,
    feller_core::sim::SimError
);

/// Parse arguments, run, and map the outcome to an exit code; errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(&cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("{}", serde_json::to_string_pretty(&e.report()).expect("report serializes"));
            e.exit_code()
        }
    }
}
