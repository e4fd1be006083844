use thiserror::Error;

/// Errors raised by mesh construction, assembly and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("matrix is not positive definite: pivot {pivot} has value {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not symmetric: |a_ij - a_ji| = {defect:e} at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize, defect: f64 },

    #[error("matrix is singular: zero pivot at column {pivot}")]
    Singular { pivot: usize },

    #[error("Krylov breakdown at iteration {iteration} with relative residual {residual:e}")]
    Breakdown { iteration: usize, residual: f64 },

    #[error("factorization of patch {patch} failed: {source}")]
    Patch {
        patch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{factor} solve failed: {source}")]
    Inner {
        factor: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
