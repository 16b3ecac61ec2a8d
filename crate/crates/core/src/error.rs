use thiserror::Error;

/// Errors produced by generators, estimators, and analytic evaluators.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The operation was called in a way its inputs cannot support
    /// (e.g. cluster scheduling on a pattern without parentage).
    #[error("usage error: {0}")]
    Usage(String),

    /// An estimator could not produce a value (no valid replications,
    /// noise-dominated fit window, empty input).
    #[error("estimation error: {0}")]
    Estimation(String),

    /// A quadrature or series evaluation failed to converge to tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The requested model/MAC combination has no analytic result.
    #[error("not implemented: {0}")]
    NotImplemented(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
    pub fn estimation(msg: impl Into<String>) -> Self {
        Error::Estimation(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
    pub fn not_implemented(msg: impl Into<String>) -> Self {
        Error::NotImplemented(msg.into())
    }
}
