use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("shape mismatch: expected {expected} values, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("field and kernel live on different grids")]
    GridMismatch,

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid kernel profile: {0}")]
    InvalidProfile(String),

    #[error("degenerate kernel: column {column} has weighted sum {sum:e}")]
    DegenerateKernel { column: usize, sum: f64 },

    #[error("balancing did not converge after {iterations} iterations (residual {residual:e})")]
    BalancingFailure { iterations: usize, residual: f64 },

    #[error("profile is not negligible at the window edge: |phi({half_width})| = {edge_value:e}")]
    WindowTooSmall { half_width: f64, edge_value: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("kernel must be normalized before it is used in the reaction term")]
    UnnormalizedKernel,

    #[error("non-positive value {value:e} at node {node}; the logarithm is undefined")]
    NonPositive { node: usize, value: f64 },

    #[error("invalid initial datum: {0}")]
    InvalidInitialDatum(String),

    #[error(
        "step failure at t = {time}: node {node} reached {value:e} after {halvings} step halvings"
    )]
    StepFailure {
        time: f64,
        node: usize,
        value: f64,
        halvings: u32,
    },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration field `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("parse error in {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit status: 2 for invalid input, 3 for numerical failure, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Context { source, .. } => source.exit_code(),
            Error::StepFailure { .. }
            | Error::BalancingFailure { .. }
            | Error::NumericalFailure(_)
            | Error::NonPositive { .. } => 3,
            Error::Io(_) | Error::Csv(_) => 1,
            _ => 2,
        }
    }
}
