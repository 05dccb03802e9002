use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alternative index {index} out of range for {count} alternatives")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter {theta} outside the family domain ({lo}, {hi})")]
    OutsideDomain { theta: f64, lo: f64, hi: f64 },

    #[error("non-unique closest active alternative for index {index}: candidates {first} and {second}")]
    NonUniqueClosest { index: usize, first: usize, second: usize },

    #[error("nonpositive drift {drift} for alternative {index}; the rule need not stop")]
    NonPositiveDrift { index: usize, drift: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("series did not converge within {cap} terms")]
    NoConvergence { cap: usize },

    #[error("replication {rep} exceeded the step cap {cap}")]
    StepCapExceeded { rep: u64, cap: u64 },

    #[error("observation stream exhausted after {n} observations")]
    StreamExhausted { n: u64 },

    #[error("mixture statistic underflowed at every quadrature node (step {n})")]
    QuadratureUnderflow { n: u64 },

    #[error("configuration mismatch: {0}")]
    Mismatch(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Whether the error stems from user input rather than a numerical failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::IndexOutOfRange { .. }
                | Error::InvalidArgument(_)
                | Error::OutsideDomain { .. }
                | Error::Mismatch(_)
                | Error::Config(_)
                | Error::NonUniqueClosest { .. }
                | Error::NonPositiveDrift { .. }
        )
    }
}
