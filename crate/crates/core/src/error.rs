use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid constellation order {0}: must be a power of two, at least 2")]
    InvalidOrder(usize),
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),
    #[error("index {index} out of range for size {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid noise standard deviation {0}")]
    InvalidNoise(f64),
    #[error("invalid decision grid: {0}")]
    InvalidGrid(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("configuration mask {mask} out of range for {m} intervals")]
    ConfigOutOfRange { mask: u64, m: usize },
    #[error("constellation order {0} too large for equivalence enumeration (max 16)")]
    TooLarge(usize),
    #[error("quadrature did not converge: estimate {estimate}, error estimate {error}")]
    Quadrature { estimate: f64, error: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("inconsistent alist adjacency: {0}")]
    Inconsistent(String),
    #[error("invalid simulation config: {0}")]
    SimConfig(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
