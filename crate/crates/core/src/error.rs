use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |M_ij - conj(M_ji)| = {residual:.3e})")]
    NonHermitian { residual: f64 },

    #[error("trace is {trace}, expected 1 (|Tr - 1| = {residual:.3e})")]
    NotUnitTrace { trace: f64, residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("star product is undefined for D = 2")]
    UndefinedForDim2,

    #[error("polarization {p} outside [{min}, {max}]")]
    PolarizationOutOfRange { p: f64, min: f64, max: f64 },

    #[error("vector is not normalized (norm {norm})")]
    NonUnitVector { norm: f64 },

    #[error("distance inequality chain violated: {0}")]
    InequalityViolation(String),

    #[error("subsystem dimensions must satisfy dA <= dB (got {da} > {db})")]
    RequiresDaLeDb { da: usize, db: usize },

    #[error("state is not a depolarized pure state")]
    NotDps,

    #[error("polarization is numerically zero; any purification is consistent")]
    AmbiguousAtPZero,

    #[error("invalid Schmidt vector: {0}")]
    InvalidSchmidtVector(String),

    #[error("parameter {0} outside [0, 1]")]
    FOutOfRange(f64),

    #[error("channel is not trace preserving (residual {residual:.3e})")]
    NotTracePreserving { residual: f64 },

    #[error("dimension {0} is not supported by this operation")]
    UnsupportedDimension(usize),

    #[error("tensor-power dimension {dim} exceeds limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("moments are inconsistent with any depolarized pure state: {0}")]
    InconsistentMoments(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
