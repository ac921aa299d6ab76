//! Error type shared across the crate.

/// Errors produced by construction and analysis operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (relative deviation {dev:.3e})")]
    NotHermitian { dev: f64 },

    #[error("eigensolver did not converge within {iterations} iterations")]
    EigenFailed { iterations: usize },

    #[error("rank-deficient least-squares system (rank {rank} of {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("not a density matrix: {0}")]
    InvalidState(String),

    #[error("state is not faithful (minimum eigenvalue {min_eig:.3e})")]
    NotFaithful { min_eig: f64 },

    #[error("not a QMS generator: {0}")]
    NotGenerator(String),

    #[error("generator is not conditionally completely positive (offending Choi eigenvalue {min_eig:.3e})")]
    NotCcp { min_eig: f64 },

    #[error("state is not invariant (residual {residual:.3e})")]
    NotInvariant { residual: f64 },

    #[error("no privileged representation: {0}")]
    NoPrivilegedRep(String),

    #[error("parameter s = {s} outside [0, 1]")]
    SOutOfRange { s: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
