use crate::conic::SolveStatus;

/// Errors raised while building, solving or evaluating MGDRO models.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("core set {index} is not contained in the sample space")]
    NotContained { index: usize },
    #[error("solver finished with status {0:?}")]
    Solver(SolveStatus),
    #[error("sampling stalled after {0} consecutive rejections")]
    RejectionStall(usize),
    #[error("clustering failed: {0}")]
    Clustering(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_check(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what}: expected {expected}, got {got}"
        )))
    }
}
