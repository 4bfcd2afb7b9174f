use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("metric tensor is not positive definite at theta = {theta:?}")]
    NonSpdMetric { theta: Vec<f64> },

    #[error(
        "negative Hessian precision is not positive definite at theta = {theta:?}; \
         use precision kind `fisher` instead"
    )]
    NonSpdPrecision { theta: Vec<f64> },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("MAP search failed: {0}")]
    MapFailure(String),

    #[error("logarithmic map did not converge after {iterations} iterations (best residual {residual:e})")]
    LogMapFailure { iterations: usize, residual: f64 },

    #[error("geodesic integration failed with status {0:?}")]
    Geodesic(crate::geodesic::GeodesicStatus),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error(
        "transport problem of size {n} x {m} exceeds the cap of {cap} pairs; subsample the inputs"
    )]
    TooLarge { n: usize, m: usize, cap: usize },

    #[error("no usable samples: {0}")]
    NoSamples(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
