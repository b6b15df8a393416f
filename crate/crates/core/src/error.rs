use thiserror::Error;

/// Errors raised by the lattice laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested quantity is outside the regime where the theory applies
    /// (for example a Green function in dimension d <= 2).
    #[error("theory domain: {0}")]
    TheoryDomain(String),

    #[error("potential support point {point:?} lies outside the box of radius {radius}")]
    SupportOverflow { point: Vec<i64>, radius: i64 },

    #[error("metric is not positive definite: pivot {index} = {pivot:e}; null direction {direction:?}")]
    DegenerateMetric {
        index: usize,
        pivot: f64,
        direction: Vec<f64>,
    },

    #[error("memory budget exceeded: need {required_bytes} bytes, limit {limit_bytes}")]
    MemoryBudget {
        required_bytes: u64,
        limit_bytes: u64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::TheoryDomain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
