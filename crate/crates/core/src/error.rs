use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Variants fall into three classes, see [`Error::class`]: invalid input
/// (a violated precondition or malformed data), a numerical post-condition
/// that did not hold, and the semantic negative of two ensembles not
/// belonging to the same equivalence class.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |m - m^dagger| = {residual:e} > {tol:e}")]
    NotHermitian { residual: f64, tol: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("state is not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },
    #[error("vectors are not orthonormal: max Gram deviation {residual:e} > {tol:e}")]
    NotOrthonormal { residual: f64, tol: f64 },
    #[error("{rows} rows do not fit in dimension {target_dim}")]
    TooManyRows { rows: usize, target_dim: usize },
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("not a density matrix: {0}")]
    NotADensityMatrix(String),
    #[error("count {count} is smaller than the rank {rank}")]
    CountTooSmall { count: usize, rank: usize },
    #[error("reference dimension {dim_k} is smaller than the required {required}")]
    ReferenceTooSmall { dim_k: usize, required: usize },
    #[error("ensembles are not equivalent: max |rho_1 - rho_2| = {deviation:e} > {tol:e}")]
    NotEquivalent { deviation: f64, tol: f64 },
    #[error("target state {index} lies outside the support: residual {residual:e} > {tol:e}")]
    TargetOutsideSupport { index: usize, residual: f64, tol: f64 },
    #[error("measurement basis has {found} vectors, reference dimension is {dim_k}")]
    BasisNotComplete { found: usize, dim_k: usize },
    #[error("measurement basis is not orthonormal: max Gram deviation {residual:e}")]
    BasisNotOrthonormal { residual: f64 },
    #[error("index {index} out of range 0..{bound}")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("gate arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical check failed: {0}")]
    Contract(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Invalid,
    Numerical,
    NotEquivalent,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Contract(_) => ErrorClass::Numerical,
            Error::NotEquivalent { .. } | Error::TargetOutsideSupport { .. } => {
                ErrorClass::NotEquivalent
            }
            _ => ErrorClass::Invalid,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
