//! Sparse storage, factorization and eigen-solvers used by the finite
//! element layer and the closeness estimates.

pub mod cholesky;
pub mod eigen;
pub mod sparse;

pub use cholesky::EnvelopeCholesky;
pub use eigen::{congruence_max_eigenvalue, dense_generalized, pencil_max_eigenvalue, shift_invert_block_lanczos, Eigenpairs, LanczosOptions};
pub use sparse::CsrMatrix;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not positive definite (pivot {pivot}, value {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("eigen-solver did not converge: {0}")]
    NoConvergence(String),
}
