use thiserror::Error;

/// Crate-wide error type.
///
/// Numerical operators report *where* they failed (a time, an interval index)
/// so that Monte Carlo drivers can log the offending path and continue or abort.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A time or index falls outside the range covered by sampled data.
    #[error("range error: {0}")]
    Range(String),

    /// The requested operation does not apply to the given parameter regime.
    #[error("usage error: {0}")]
    Usage(String),

    /// Inconsistent or unsatisfiable configuration (grids, caps, config files).
    #[error("configuration error: {0}")]
    Config(String),

    /// The SDE integrator produced a non-finite state.
    #[error("integration error at t = {t}: {message}")]
    Integration { t: f64, message: String },

    /// A structural invariant of the simulated path was violated.
    #[error("integrity error at t = {t}: {message}")]
    Integrity { t: f64, message: String },

    /// The coupling construction failed on interval `j`.
    #[error("coupling error on interval {j}: {message}")]
    Coupling { j: usize, message: String },

    /// A root scan cannot certify completeness at the requested resolution.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A boundary extraction horizon is unusable (ill-conditioned or too short).
    #[error("horizon error: {0}")]
    Horizon(String),

    /// The right-boundary normalization degenerated below threshold.
    #[error("degenerate boundary: {0}")]
    DegenerateBoundary(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
