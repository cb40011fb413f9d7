use thiserror::Error;

/// Reasons a configuration is rejected before any iteration runs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("polynomial P is not strictly positive: {0}")]
    PolynomialNotPositive(String),
    #[error("odd polynomial coefficients b = {0:?} are not supported; only even solutions are computed")]
    OddCoefficients([f64; 3]),
    #[error("density (P + v)^-q is not integrable for this kernel: {0}")]
    DensityNotIntegrable(String),
    #[error("grid does not match the symmetry of P: {0}")]
    SymmetryMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("non-finite value produced at node {node}")]
    NonFinite { node: usize },
    #[error("profile tail does not cover a decade of radius along {direction:?}: {detail}")]
    InsufficientTail { direction: [f64; 3], detail: String },
    #[error("integral diverges: {0}")]
    NotIntegrable(String),
    #[error("constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("check not applicable: {0}")]
    NotApplicable(String),
    #[error("no bracket for the growth threshold: every w0 up to {w0_max} gives {outcome}")]
    BracketNotFound { w0_max: f64, outcome: String },
    #[error("shooting outcome is not monotone in w0 near {w0}")]
    NonMonotoneOutcome { w0: f64 },
    #[error("profile does not match the grid: {0}")]
    GridMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
