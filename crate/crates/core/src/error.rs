use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("characteristic {0} is not prime")]
    CompositeCharacteristic(u32),
    #[error("modulus {0:?} is not a monic irreducible polynomial of degree {1}")]
    ReducibleModulus(Vec<u32>, u32),
    #[error("field of order {0} exceeds the supported maximum of 2^16")]
    FieldTooLarge(u64),
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("element {0} does not belong to a field of order {1}")]
    FieldMismatch(u32, u32),

    #[error("enumeration of {needed} vectors exceeds the cap of {cap}")]
    EnumerationCapExceeded { needed: u128, cap: u64 },
    #[error("the code has dimension 0")]
    ZeroCode,
    #[error("generator has rank {rank} but {expected} rows were declared")]
    RankMismatch { rank: usize, expected: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} is out of range for length {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("cannot select {s} positions out of {n}: need s < n")]
    SizeTooLarge { s: usize, n: usize },
    #[error("expander with lambda2 <= {threshold} not found after {attempts} attempts (last {last})")]
    ExpansionNotAchieved { threshold: f64, attempts: u32, last: f64 },
    #[error("random walk collected {collected} of {wanted} distinct vertices within {steps} steps")]
    WalkStalled { collected: usize, wanted: usize, steps: usize },

    #[error("domain error: {0}")]
    Domain(String),
    #[error("moment order {0} must be even and at least 2")]
    OddMoment(u32),
    #[error("infeasible parameters: {}", .0.join("; "))]
    Infeasible(Vec<String>),

    #[error("evaluation points are not distinct")]
    DuplicatePoints,
    #[error("length {n} exceeds the number of available evaluation points {q}")]
    TooLong { n: usize, q: u32 },
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("no full-rank generator after {0} attempts")]
    RankFailure(u32),

    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn infeasible(reason: impl Into<String>) -> Self {
        Error::Infeasible(vec![reason.into()])
    }

    pub(crate) fn domain(reason: impl Into<String>) -> Self {
        Error::Domain(reason.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
