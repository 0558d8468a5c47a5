//! The `qsp` command line: verification sweeps, classification, simulation
//! and matrix export for quadratic stochastic process families.
//!
//! Exit codes: `0` success, `1` verification or validity failure, `2` usage
//! or configuration error.

use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use qsp_core::StochKind;

pub mod commands;
pub mod config;
pub mod files;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Failure,
}

impl Status {
    pub fn from_ok(ok: bool) -> Self {
        if ok {
            Status::Success
        } else {
            Status::Failure
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Failure => 1,
        }
    }
}

pub const USAGE_EXIT: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "qsp", version, about = "Verify, classify and simulate quadratic stochastic processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the Kolmogorov-Chapman equation and stochasticity on a time grid
    Verify(VerifyArgs),
    /// Report the stochasticity kinds of a matrix, a family member or an M7 spec
    Classify(ClassifyArgs),
    /// Evolve a distribution under a family
    Simulate(SimulateArgs),
    /// Write a family member at (s, t) as a matrix JSON file
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    /// Family id: Q1..Q7, ROT, ZERO, CANTOR_A|B|C, M1..M7, UNIFORM
    #[arg(long)]
    pub family: Option<String>,
    /// Square family giving B for M7
    #[arg(long = "b-family")]
    pub b_family: Option<String>,
    /// Square family giving C for M7
    #[arg(long = "c-family")]
    pub c_family: Option<String>,
    /// Family parameter, e.g. PHI=3^(-t); prefix with B. or C. for M7 slices
    #[arg(long = "param", value_name = "NAME=EXPR")]
    pub params: Vec<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Multiplication: mod, max or table:<path>
    #[arg(long, default_value = "mod")]
    pub op: String,
    /// Stochasticity kind for cubic families: 12, 13, 23, 1, 2, 3, twice
    #[arg(long)]
    pub sigma: Option<StochKind>,
    /// start:stop:count or int:<n>
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Write the full report as JSON
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Matrix JSON file
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Require the input to be a square matrix
    #[arg(long)]
    pub square: bool,
    /// Classify an M7 spec given by --b-family and --c-family
    #[arg(long)]
    pub m7: bool,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long = "s", default_value_t = 0.0)]
    pub s: f64,
    #[arg(long = "t", default_value_t = 1.0)]
    pub t: f64,
    /// Grid for M7 type classification and domain checks
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Split,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_enum, default_value_t = Mode::Split)]
    pub mode: Mode,
    /// Step from each sample time to the next instead of from s
    #[arg(long)]
    pub chained: bool,
    /// Initial distribution, comma separated (default uniform)
    #[arg(long)]
    pub x0: Option<String>,
    #[arg(long = "s", default_value_t = 0.0)]
    pub s: f64,
    /// Sample times, comma separated (default: grid points after s)
    #[arg(long)]
    pub times: Option<String>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Estimate the long-time limit over the sample times
    #[arg(long)]
    pub limit: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long = "s")]
    pub s: f64,
    #[arg(long = "t")]
    pub t: f64,
    /// Evaluate parameter functions on integer times only
    #[arg(long)]
    pub discrete: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs one command, writing reports to `out` and diagnostics to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<Status, CliError> {
    match cli.command {
        Command::Verify(args) => commands::verify(&args, out),
        Command::Classify(args) => commands::classify(&args, out),
        Command::Simulate(args) => commands::simulate(&args, out, err),
        Command::Eval(args) => commands::eval(&args, out),
    }
}

/// Parses `args`, runs, and returns the exit code.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { USAGE_EXIT } else { 0 };
        }
    };
    let stdout = io::stdout();
    let stderr = io::stderr();
    match run(cli, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(status) => status.code(),
        Err(e) => {
            let _ = writeln!(stderr.lock(), "error: {e}");
            USAGE_EXIT
        }
    }
}
