use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Numerical(#[from] monosplit::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("no convergence within {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("matrix market: {0}")]
    MatrixMarket(String),
}

impl HarnessError {
    /// Process exit code: 1 for a violated rate guarantee, 2 for usage and
    /// input errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use monosplit::Error as E;
        match self {
            HarnessError::Numerical(E::Divergence { .. }) => 1,
            HarnessError::Numerical(
                E::NonFinite(_)
                | E::Singular(_)
                | E::SpectralNotConverged { .. }
                | E::NotPositiveDefinite(_),
            )
            | HarnessError::NotConverged { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
