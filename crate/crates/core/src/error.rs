use thiserror::Error;

use crate::fnexpr::{EvalError, ParseError};
use crate::stochasticity::StochKind;

/// Errors produced by the library. Verification failures are reported as
/// data (see `kce::KceReport`); these variants cover rejected inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("index ({i}, {j}, {k}) out of range for m = {m}")]
    IndexOutOfRange { m: usize, i: usize, j: usize, k: usize },

    #[error("dimension must be positive")]
    ZeroDimension,

    #[error("expected {expected} entries, got {got}")]
    WrongLength { expected: usize, got: usize },

    #[error("operation table entry a({j}, {n}) = {value} not in [0, {m})")]
    InvalidTable { m: usize, j: usize, n: usize, value: usize },

    #[error("time points must satisfy {0}")]
    TimeOrder(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("parameter domain violated at (s={s}, t={t}): {inequality} (value {value})")]
    Domain {
        s: f64,
        t: f64,
        inequality: String,
        value: f64,
    },

    #[error("invalid family parameter: {0}")]
    Parameter(String),

    #[error("family {family} does not support {what}")]
    Unsupported { family: String, what: String },

    #[error("matrix is not {kind}: worst violation {violation:.3e}{context}")]
    NotStochastic {
        kind: StochKind,
        violation: f64,
        context: String,
    },

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub type Result<T> = std::result::Result<T, Error>;
