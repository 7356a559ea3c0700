use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("slot {slot} has variance {found}, cannot {action}")]
    SlotVariance {
        slot: usize,
        found: &'static str,
        action: &'static str,
    },
    #[error("frame is not orthonormal: residual {0:e}")]
    Frame(f64),
    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),
    #[error("signature error: {0}")]
    Signature(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate datum: |g(xi,xi)| = {0:e}")]
    Degenerate(f64),
    #[error("holonomy closure did not stabilize after {0} rounds")]
    Closure(usize),
    #[error("identification failed: {0}")]
    Identification(String),
    #[error("parameters out of range: {0}")]
    Range(String),
    #[error("involution step {step} ({name}) failed check `{check}`: residual {residual:e}")]
    InvariantViolation {
        step: usize,
        name: String,
        check: String,
        residual: f64,
    },
    #[error("t = {t} outside the domain; singular time {singular_time}")]
    Domain { t: f64, singular_time: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
