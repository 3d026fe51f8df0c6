use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("isotropic pivot at vector {index}: (v,v) = {value:.3e}")]
    IsotropicPivot { index: usize, value: f64 },

    #[error("vectors are not orthonormal (residual {0:.3e})")]
    NotOrthonormal(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("matrix is not nilpotent (residual {0:.3e})")]
    NotNilpotent(f64),

    #[error("zero input")]
    ZeroInput,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("iteration cap exceeded: {0}")]
    IterationCap(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("operator is not supported on u(n) (residual {0:.3e})")]
    NotUnitarySupported(f64),

    #[error("strict profile inequality violated at t = {t:.6}: margin {margin:.3e}")]
    InequalityViolated { t: f64, margin: f64 },

    #[error("curvature routes disagree by {0:.3e}; refine the grid")]
    GridTooCoarse(f64),

    #[error("set belongs to A0: {0}")]
    InA0(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
