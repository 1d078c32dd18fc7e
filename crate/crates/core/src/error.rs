use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {arg} exceeds the sieve limit {limit}")]
    RangeExceedsLimit { arg: u64, limit: u64 },

    #[error("prime index {index} is outside the sieved range ({available} primes available)")]
    IndexOutOfRange { index: u64, available: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("exponent fit needs at least 3 points, got {got}")]
    InsufficientPoints { got: usize },

    #[error("exact product requested for n = {n}, above the exact cap {cap}")]
    ExactCapExceeded { n: u64, cap: u64 },

    /// Odd bracket in the closed form for S_n; never expected, signals a bug.
    #[error("closed-form bracket is odd at n = {n}")]
    ParityViolation { n: u64 },

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupted checkpoint payload: {0}")]
    CorruptedPayload(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
