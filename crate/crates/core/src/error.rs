use thiserror::Error;

/// Errors raised by the tomography pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid too narrow: {what} is {value:.3e} at the boundary (limit {limit:.1e})")]
    GridTooNarrow {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("noise kernel is a point mass when eta = 1")]
    EtaIsOne,

    #[error("window construction failed: Gram deviation {deviation:.3e} exceeds {limit:.1e}")]
    ConstructionFailed { deviation: f64, limit: f64 },

    #[error("truncated expansion has norm {norm:.3e}, cannot normalize")]
    DegenerateTruncation { norm: f64 },

    #[error("rejection sampler acceptance rate {rate:.2e} below {limit:.1e}")]
    RejectionBudgetExceeded { rate: f64, limit: f64 },

    #[error("chain diverged at iteration {iteration}: log-posterior is NaN")]
    ChainDiverged { iteration: usize },

    #[error("weighted integral does not converge: relative tail change {change:.3e}")]
    Diverging { change: f64 },

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
