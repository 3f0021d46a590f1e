use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid robot model: {0}")]
    InvalidModel(String),

    #[error("unknown chain {0}")]
    UnknownChain(usize),

    #[error("covariance matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("{points} data points cannot support {components} mixture components")]
    InsufficientData { points: usize, components: usize },

    #[error("exemplar target configuration is in collision")]
    TargetInCollision,

    #[error(
        "exemplar collection stopped after {attempts} attempts with {accepted} accepted \
         (acceptance rate {rate:.4})"
    )]
    ExemplarBudgetExhausted {
        accepted: usize,
        attempts: usize,
        rate: f64,
    },

    #[error("invalid planning endpoint: {0}")]
    InvalidEndpoint(String),

    #[error("path needs at least {needed} waypoints, got {got}")]
    TooFewWaypoints { needed: usize, got: usize },

    #[error("spline curve leaves free space near parameter {parameter:.6}")]
    CurveInCollision { parameter: f64 },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }
}
