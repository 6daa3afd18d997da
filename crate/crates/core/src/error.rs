use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("factorization failed: pivot {pivot:e} at index {index}")]
    Factorization { index: usize, pivot: f64 },
    #[error("resource cap exceeded: {needed} qubits requested, cap is {cap}")]
    ResourceCap { needed: usize, cap: usize },
    #[error("width mismatch: {0}")]
    WidthMismatch(String),
    #[error("overlapping qubits: {0}")]
    Overlap(String),
    #[error("qubit count mismatch: expected {expected}, got {got}")]
    QubitMismatch { expected: usize, got: usize },
    #[error("permutation collision at basis index {0}")]
    Collision(u128),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
