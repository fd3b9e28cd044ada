use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad arguments, malformed files, domain violations.
    Usage,
    /// Well-formed input that cannot be served (stack cap exceeded).
    Infeasible,
    /// A broken internal invariant. Always a bug.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("schedule invalid at t={t}: width {width} not in 1..={max}")]
    InvalidWidth { t: usize, width: usize, max: usize },

    #[error("schedule has {got} steps but instance has {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("infeasible at t={t}: stack size {stack} exceeds cap K={cap}")]
    Infeasible { t: usize, stack: usize, cap: usize },

    #[error("read-cost function decreases between k={k} and k={next}")]
    NonMonotone { k: usize, next: usize },

    #[error("malformed merge tree: {0}")]
    MalformedTree(String),

    #[error("key {0} is not on the right spine")]
    NotOnSpine(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("instance too large for exhaustive search: n={n} > max_n={max_n}")]
    TooLarge { n: usize, max_n: usize },

    #[error("ladder overflow: {0}")]
    LadderOverflow(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown {what}: {value}")]
    Unknown { what: &'static str, value: String },

    #[error("internal invariant breach: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Infeasible { .. } => ErrorClass::Infeasible,
            Error::Internal(_) => ErrorClass::Internal,
            _ => ErrorClass::Usage,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
