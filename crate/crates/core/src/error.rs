use std::path::PathBuf;

use thiserror::Error;

use crate::solver::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value produced by {0}")]
    NumericalBreakdown(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("preconditioner is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("incomplete Cholesky broke down after {retries} shifted retries (last shift {shift:e})")]
    IcBreakdown { retries: usize, shift: f64 },

    #[error("solver breakdown at iteration {iteration}: {reason}")]
    Breakdown {
        iteration: usize,
        reason: &'static str,
        partial: Box<SolveReport>,
    },

    #[error("triangular factor R is singular at column {column}")]
    RSingular { column: usize },

    #[error(
        "block projection {block} increased the residual norm from {before:e} to {after:e}"
    )]
    OrthogonalityCollapse {
        block: usize,
        before: f64,
        after: f64,
    },

    #[error("right-hand side sequence is rank deficient at index {index}")]
    SequenceDegenerate { index: usize },

    #[error("inner solve for sequence vector {index} did not converge (relres {relres:e})")]
    InnerSolveFailed { index: usize, relres: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("basis archive: {0}")]
    Archive(String),

    #[error("requested {requested} basis columns exceeds the diagnostics limit of {limit}")]
    MemoryGuard { requested: usize, limit: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable kebab-case tag, used on the CLI diagnostic stream and by the C API.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NumericalBreakdown(_) => "numerical-breakdown",
            Error::InvalidInput(_) => "invalid-input",
            Error::NotSpd(_) => "not-spd",
            Error::IcBreakdown { .. } => "ic-breakdown",
            Error::Breakdown { .. } => "breakdown",
            Error::RSingular { .. } => "r-singular",
            Error::OrthogonalityCollapse { .. } => "orthogonality-collapse",
            Error::SequenceDegenerate { .. } => "sequence-degenerate",
            Error::InnerSolveFailed { .. } => "inner-solve-failed",
            Error::Parse { .. } => "parse-error",
            Error::Archive(_) => "archive-error",
            Error::MemoryGuard { .. } => "memory-guard",
            Error::Config(_) => "config-error",
            Error::Io(_) => "io-error",
        }
    }

    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::dim(context, expected, actual))
    }
}
