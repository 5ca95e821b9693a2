use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("feature kind {0} is not supported for one-step classification")]
    UnsupportedFeatureKind(String),

    #[error("degenerate statistic: {0}")]
    DegenerateStatistic(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// True for failures that stem from the data or the numerics rather than
    /// from how the caller configured the operation.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite(_)
                | Error::ConvergenceFailure { .. }
                | Error::DegenerateModel(_)
                | Error::DegenerateStatistic(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
