use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degree {0} is not allowed: every equation must have degree at least 2")]
    InvalidDegree(u32),

    #[error("dimension must be at least 1")]
    InvalidDimension,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coefficient count overflows platform limits for d={d}, degree={degree}")]
    CoefficientOverflow { d: usize, degree: u32 },

    #[error("polynomial index {index} out of range for a system of {n} equations")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("point is not on the unit sphere (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("cannot normalize the zero vector")]
    ZeroVector,

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("invalid monomial: {0}")]
    InvalidMonomial(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parameters out of floating range: {0}")]
    ParametersOutOfRange(String),

    #[error("system shape does not fit the algorithm: {0}")]
    IncompatibleSystem(String),

    #[error("descent direction finder degenerated: all columns vanished")]
    DegenerateDirection,

    #[error("oracle request refused: {0}")]
    OracleRefused(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
