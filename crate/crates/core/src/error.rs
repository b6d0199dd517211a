//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature hit the subdivision cap before meeting tolerance.
    #[error("quadrature did not converge on [{lo}, {hi}]: error bound {error_bound:e} above tolerance {tol:e}")]
    QuadratureNonConvergence {
        lo: f64,
        hi: f64,
        error_bound: f64,
        tol: f64,
    },

    /// The norming-constant root finder could not bracket its target.
    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),

    /// An expansion evaluator was called with a point outside its regime.
    #[error("regime mismatch: {op} requires {expected}, got {actual}")]
    RegimeMismatch {
        op: &'static str,
        expected: &'static str,
        actual: String,
    },

    /// A point sits on the D = 0 shell but matches no boundary parametrization.
    #[error("ambiguous boundary classification at (x, y) = ({x}, {y}): D = {d:e}")]
    AmbiguousBoundary { x: f64, y: f64, d: f64 },

    /// A rho rule contradicts the limits declared for it.
    #[error("inconsistent rho rule: {0}")]
    InconsistentRule(String),

    /// A threshold 1 + a_n x left the support (0, 1) of the marginal df.
    #[error("threshold out of range: 1 + a_n x = {threshold} at n = {n}")]
    ThresholdOutOfRange { threshold: f64, n: u64 },

    /// Study configuration failed validation.
    #[error("invalid config at `{path}`: {message}")]
    InvalidConfig { path: String, message: String },

    /// Report or file I/O failure in the study runner.
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
