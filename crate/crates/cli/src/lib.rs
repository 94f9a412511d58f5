//! Command-line driver: reads a JSON run configuration, runs one analysis
//! and writes JSON, CSV and SVG files.
//!
//! Exit codes: 0 when a result was produced (an inconclusive verdict
//! included), 2 on numerical non-convergence, 3 on configuration errors and
//! 1 on I/O failures.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use flocstab::FlocError;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "flocstab", version, about = "Steady states and stability of a flocculation model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Number of grid cells, overriding the configuration.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Worker threads for sweeps; 0 picks the core count.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Criteria for the zero steady state.
    CheckZero,
    /// Existence checks and multi-start steady-state solve.
    Steady,
    /// Criteria for a computed or supplied steady state.
    CheckSteady,
    /// Time integration from a configured initial state.
    Simulate,
    /// Stability-region sweep (Example 2) or zero-solution sweep over b (Example 1).
    Sweep,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::NotConverged(_) | CliError::Numerical(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl From<FlocError> for CliError {
    fn from(e: FlocError) -> Self {
        match e {
            FlocError::EigenFailure(_) | FlocError::BracketExhausted { .. } | FlocError::NonFinite(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = config::load(cli.config.as_deref())?;
    let problem = config::resolve(&cfg, cli.grid)?;
    let mut out = output::OutDir::create(&cli.out)?;
    let result = match cli.command {
        Command::CheckZero => commands::check_zero(&problem, &cfg, &mut out),
        Command::Steady => commands::steady(&problem, &cfg, &mut out),
        Command::CheckSteady => commands::check_steady(&problem, &cfg, &mut out),
        Command::Simulate => commands::simulate(&problem, &cfg, &mut out),
        Command::Sweep => commands::sweep(&problem, &cfg, &mut out, cli.jobs),
    };
    for p in out.written() {
        println!("wrote: {}", p.display());
    }
    result
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
