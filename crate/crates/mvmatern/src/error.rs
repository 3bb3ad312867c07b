//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, likelihood evaluation, and IO.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error in {op}: {message}")]
    Domain { op: &'static str, message: String },

    /// A parameter vector had the wrong length for its model family.
    #[error("parameter vector has length {got}, expected {expected} for {family} with p={p}")]
    ThetaLength {
        family: &'static str,
        p: usize,
        expected: usize,
        got: usize,
    },

    /// Parameter expansion produced a non-finite structural parameter
    /// (typically overflow of an exp link during an optimizer trial step).
    #[error("parameter expansion produced non-finite values at coordinate {coordinate}")]
    NonFiniteParams { coordinate: String },

    /// A covariance block was not positive definite. Carries the block index
    /// (position in the Vecchia ordering) when the failure occurred inside a
    /// blockwise likelihood evaluation.
    #[error("covariance matrix not positive definite{}", block.map(|k| format!(" at block {k}")).unwrap_or_default())]
    NotPositiveDefinite { block: Option<usize> },

    /// The dense-oracle observation cap was exceeded.
    #[error("dense oracle supports at most {cap} observations, got {n}")]
    DenseCapExceeded { n: usize, cap: usize },

    /// A component had no observations (or its mean is not estimable).
    #[error("component {label:?} has no usable observations")]
    EmptyComponent { label: String },

    /// An unknown strategy name was requested from a registry.
    #[error("unknown {kind} {name:?}; available: {available}")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    /// A likelihood or objective evaluation returned a non-finite value.
    #[error("objective evaluation produced a non-finite value")]
    NonFiniteObjective,

    /// Input file could not be read.
    #[error("failed to read {path}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// CSV parsing failed.
    #[error("failed to parse CSV {path}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    /// A required column was absent from the CSV header.
    #[error("column {name:?} not found in header of {path}")]
    MissingColumn { name: String, path: String },

    /// No rows survived cleaning.
    #[error("dataset {path} has no usable rows after cleaning")]
    EmptyDataset { path: String },

    /// JSON (de)serialization failed.
    #[error("JSON error")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(op: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            op,
            message: message.into(),
        }
    }

    /// Whether the error signals a recoverable bad trial point (as opposed to
    /// a caller mistake): the optimizer treats these as "step not improved".
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::NonFiniteParams { .. }
                | Error::NonFiniteObjective
                | Error::Domain { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
