//! Error type shared across the crate.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not a valid covariance matrix: {0}")]
    InvalidCovariance(String),

    #[error("not a symplectic matrix: max |T^t D T - D| = {defect:.3e}")]
    NotSymplectic { defect: f64 },

    #[error("singular matrix encountered in {0}")]
    Singular(String),

    #[error("optimization failed to converge: {0}")]
    NonConvergence(String),

    #[error("sweep cell ({row}, {col}) failed: {source}")]
    SweepCell {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("estimation failed in repetition {rep}: {source}")]
    Repetition {
        rep: usize,
        #[source]
        source: Box<Error>,
    },
}
