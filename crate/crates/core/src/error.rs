use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("map is not completely positive")]
    NotCp,

    #[error("map is not unital (max deviation of Phi(I) from I is {0:e})")]
    NotUnital(f64),

    #[error("map is not both unital and trace preserving")]
    NotUnitalTp,

    #[error("map is not entanglement breaking")]
    NotEb,

    #[error("map is not C*-extreme: {0}")]
    NotExtreme(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("degenerate random draw: {0}")]
    DegenerateDraw(String),

    #[error("domination precondition fails: {0}")]
    PreconditionDomination(String),

    #[error("verification failed: {what} (residual {residual:e})")]
    VerificationFailed { what: String, residual: f64 },

    #[error("rank-one map is not dominated by the canonical map")]
    NotDominated,

    #[error("domination holds but no block matches: {0}")]
    StructureViolation(String),

    #[error("matrix is not invertible (rank {rank} < {dim})")]
    NotInvertible { rank: usize, dim: usize },

    #[error("coefficients are not normalized (max deviation of sum T*T from I is {0:e})")]
    CoefficientsNotNormalized(f64),

    #[error("channel carries no Holevo certificate")]
    NoCertificate,
}

pub type Result<T> = std::result::Result<T, Error>;
