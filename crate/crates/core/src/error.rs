use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no training point within distance {eps} of the query")]
    EmptyNeighborhood { eps: f64 },

    /// The solver did not certify optimality. Carries the best iterate found
    /// (as `f64`, whatever the working precision) and its duality gap.
    #[error("solver failed to converge: duality gap {gap:e} exceeds tolerance {tol:e}")]
    SolverFailure { theta: Vec<f64>, gap: f64, tol: f64 },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
