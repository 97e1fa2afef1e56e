use thiserror::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// Vector operands of different lengths.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// A preconditioner diagonal entry was zero or negative.
    #[error("singular preconditioner: diagonal entry {index} is {value} (must be > 0)")]
    SingularPreconditioner { index: usize, value: f64 },

    /// A non-finite value surfaced mid-run; the run is aborted rather than
    /// letting NaN/Inf propagate into the traces.
    #[error("non-finite value in {context} at step {step}")]
    NonFinite { context: &'static str, step: u64 },

    /// Invalid configuration (bad hyperparameter range, malformed config
    /// file, degenerate problem size, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A diagnostic was requested that the run cannot supply (unknown
    /// optimum, empty trace set, nonpositive values in a log-log fit, ...).
    #[error("metric error: {0}")]
    Metric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn metric(msg: impl Into<String>) -> Self {
        Error::Metric(msg.into())
    }
}
