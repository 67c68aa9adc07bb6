//! Error type shared by the whole crate.

use thiserror::Error;

/// Everything that can go wrong while ingesting data or running estimators.
///
/// `is_input_error` separates schema/usage problems (CLI exit code 2) from
/// numeric failures (exit code 3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column {column:?} in header")]
    MissingColumn { column: &'static str },

    #[error("row {row}: field {field:?} is not a number: {value:?}")]
    NonNumericField {
        row: u64,
        field: &'static str,
        value: String,
    },

    #[error("row {row}: labeled row for problem {problem:?} has no y value")]
    MissingOutcome { row: u64, problem: String },

    #[error("row {row}: split must be \"labeled\" or \"unlabeled\", got {value:?}")]
    BadSplit { row: u64, value: String },

    #[error("row {row}: non-finite value in field {field:?}")]
    NonFiniteField { row: u64, field: &'static str },

    #[error("problem {problem:?} has no {kind} rows")]
    EmptyProblemSide { problem: String, kind: &'static str },

    #[error("problem {problem:?}: {what} requires y on every row")]
    MissingOutcomeForTruth { problem: String, what: &'static str },

    #[error("problem {problem:?}: need at least {need} labeled rows, have {have}")]
    TooFewLabeled {
        problem: String,
        need: usize,
        have: usize,
    },

    #[error("length mismatch: {what} has {left} vs {right} entries")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("{what} needs at least {need} problems, have {have}")]
    TooFewProblems {
        what: &'static str,
        need: usize,
        have: usize,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("objective is not finite at omega = {omega}")]
    NonFiniteObjective { omega: f64 },

    #[error("{0}")]
    Numeric(String),
}

impl Error {
    /// True for schema/usage errors, false for numeric failures.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::NonFiniteObjective { .. } | Error::Numeric(_))
    }
}
