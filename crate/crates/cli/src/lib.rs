//! Command-line front end: `probe`, `scan`, `pade`, `moments` and `oracle`.
//!
//! Exit codes: 0 when a label was decided or a check passed, 1 for usage,
//! config and I/O errors, 2 when the numerics are indeterminate or degenerate.

pub mod commands;
pub mod config;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "tridiag-resolvent", version, about = "Spectrum and resolvent-set analysis of tridiagonal operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify one point and report all evidence.
    Probe(CommonArgs),
    /// Classify a grid of points; writes CSV and PGM heatmaps.
    Scan(CommonArgs),
    /// Convergents, errors and the geometric-subsequence verdict at one point.
    Pade(PadeArgs),
    /// Recover J-fraction coefficients from a moments CSV.
    Moments(CommonArgs),
    /// Compare closed-form resolvent entries with a finite-section inverse.
    Oracle(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_negative_numbers = true)]
    pub lambda: Option<Vec<f64>>,
    /// Trace length N.
    #[arg(long, value_name = "K")]
    pub n_max: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Scan worker threads (0 = all cores).
    #[arg(long, value_name = "W")]
    pub workers: Option<usize>,
    /// Use double-double (about 32 digit) arithmetic.
    #[arg(long)]
    pub high_precision: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PadeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Reference value of phi(lambda) instead of the estimate.
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_negative_numbers = true)]
    pub phi: Option<Vec<f64>>,
}

/// Why a command did not finish normally.
#[derive(Debug)]
pub enum Failure {
    /// Usage, configuration or I/O problem (exit 1).
    Usage(String),
    /// Indeterminate or degenerate numerics (exit 2).
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<tridiag_resolvent::Error> for Failure {
    fn from(e: tridiag_resolvent::Error) -> Self {
        use tridiag_resolvent::Error as E;
        match e {
            E::IllConditionedGamma { .. }
            | E::InsufficientData(_)
            | E::Degenerate { .. }
            | E::SingularTruncation { .. } => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

/// Result of a command that ran to completion.
#[derive(Debug)]
pub struct Outcome {
    /// 0 or 2.
    pub code: i32,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

fn pair(v: &Option<Vec<f64>>) -> Option<Complex64> {
    v.as_ref().map(|v| Complex64::new(v[0], v[1]))
}

fn load(args: &CommonArgs, phi: Option<Complex64>) -> Result<RunConfig, Failure> {
    let overrides = Overrides {
        lambda: pair(&args.lambda),
        n_max: args.n_max,
        out: args.out.clone(),
        workers: args.workers,
        high_precision: args.high_precision,
        phi,
    };
    RunConfig::load(&args.config, &overrides)
}

pub fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Probe(a) => commands::probe(&load(a, None)?),
        Command::Scan(a) => commands::scan(&load(a, None)?),
        Command::Pade(a) => commands::pade(&load(&a.common, pair(&a.phi))?),
        Command::Moments(a) => commands::moments(&load(a, None)?),
        Command::Oracle(a) => commands::oracle(&load(a, None)?),
    }
}
