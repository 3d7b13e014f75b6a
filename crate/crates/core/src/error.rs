use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The evaluator cannot meet its configured accuracy at this height.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// A bracketed search was handed an interval without a sign change.
    #[error("bracket error: no sign change on [{a}, {b}] (f(a) = {fa:e}, f(b) = {fb:e})")]
    Bracket { a: f64, b: f64, fa: f64, fb: f64 },

    /// Adaptive quadrature ran out of panels before meeting its tolerance.
    #[error(
        "quadrature did not converge on [{a}, {b}]: best value {value:e}, error estimate {estimate:e} after {panels} panels"
    )]
    Quadrature {
        a: f64,
        b: f64,
        value: f64,
        estimate: f64,
        panels: usize,
    },

    /// An iterative solver stopped without meeting its tolerance.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error(transparent)]
    Cache(#[from] CacheError),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of numerical convergence (as opposed to bad input or cache problems).
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. } | Error::NoConvergence { .. } | Error::Bracket { .. }
        )
    }
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported table format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("monotonicity violated at row {row}: {detail}")]
    Monotonicity { row: usize, detail: String },

    #[error("evaluator fingerprint mismatch: table has {found}, evaluator expects {expected}")]
    Fingerprint { expected: String, found: String },

    #[error("malformed table at line {line}: {detail}")]
    Format { line: usize, detail: String },

    #[error("cell moments disagree with checkpoints at row {row}")]
    Inconsistent { row: usize },
}

impl CacheError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CacheError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
