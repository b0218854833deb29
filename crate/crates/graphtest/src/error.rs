//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// A violated adjacency-matrix invariant, with the first offending location.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// entries[i][j] != entries[j][i]
    NotSymmetric { i: usize, j: usize },
    /// entries[i][i] != 0
    NotHollow { i: usize },
    /// an entry other than exactly 0.0 or 1.0
    NonBinary { i: usize, j: usize, value: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NotSymmetric { i, j } => write!(f, "not symmetric at ({i}, {j})"),
            Violation::NotHollow { i } => write!(f, "not hollow at diagonal entry {i}"),
            Violation::NonBinary { i, j, value } => {
                write!(f, "non-binary entry {value} at ({i}, {j})")
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("vertex index {index} at line {line} is below index base {base}")]
    IndexOutOfRange {
        line: usize,
        index: i64,
        base: usize,
    },

    #[error("invalid graph: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidGraph(Vec<Violation>),

    #[error("shape mismatch: {context} (expected {expected}, found {found})")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("embedding dimension {d} exceeds matrix order {n}")]
    DimensionTooLarge { d: usize, n: usize },

    #[error("need at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("second moment matrix is singular; cannot invert for covariance estimation")]
    SingularMoment,

    #[error(
        "sinkhorn failed to converge in {iterations} iterations (marginal residual {residual:.3e}); regularization may be too small"
    )]
    SinkhornNonConvergence { iterations: usize, residual: f64 },

    #[error("transport alignment failed on initialization {initialization}: {source}")]
    OtpFailure {
        initialization: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("variance correction requires n_small < n_large, got n_small={n_small}, n_large={n_large}")]
    NoCorrectionNeeded { n_large: usize, n_small: usize },

    #[error("config error: {0}")]
    Config(String),
}
