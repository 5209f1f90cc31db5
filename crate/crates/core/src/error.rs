use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time {n} is outside the table range [{first}, {last}]")]
    OutOfRange { n: usize, first: usize, last: usize },

    #[error("coordinate mismatch: analytic (m={left_m}, n={left_n}) vs empirical (m={right_m}, n={right_n})")]
    CoordinateMismatch {
        left_m: usize,
        left_n: usize,
        right_m: usize,
        right_n: usize,
    },

    #[error("denominator is zero")]
    ZeroDenominator,

    #[error("resource exhausted: {0}")]
    ResourceExhausted(String),
}

pub type Result<T> = std::result::Result<T, Error>;
