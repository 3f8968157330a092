use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite evaluation at {at}: {value}")]
    Evaluation { at: f64, value: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("resolution failure: {0}")]
    Resolution(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("truncation depth too shallow: {0}")]
    Depth(String),

    #[error("empty subshift: {0}")]
    EmptyShift(String),
}

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
