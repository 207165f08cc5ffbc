use thiserror::Error;

/// Errors raised by the linear-algebra substrate and the world-relative
/// constructions built on top of it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("operator is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("basis is not orthonormal (max Gram deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("incomplete basis: {count} vectors in dimension {dim}")]
    IncompleteBasis { count: usize, dim: usize },

    #[error("world dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("observable and state live in different worlds")]
    WorldMismatch,

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("eigensolver failed to converge")]
    Eigensolver,

    #[error("solver budget exhausted after {iterations} iterations (certified gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
