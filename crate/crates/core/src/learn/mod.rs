//! Numeric learning kernels, generic over [`Scalar`](crate::scalar::Scalar).
//!
//! These operate on dense `ndarray` matrices with one row per sample and know
//! nothing about column names, missing cells or labels; the
//! [`primitives`](crate::primitives) layer adapts tables to them.

pub mod knn;
pub mod lasso;
pub mod linear;
pub mod logistic;
pub mod tree;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearnError {
    #[error("design matrix is rank deficient")]
    SingularSystem,
    #[error("no training rows")]
    EmptyTrainingSet,
    #[error("expected {expected} values, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

pub(crate) fn check_rows(x_rows: usize, y_len: usize) -> Result<(), LearnError> {
    if x_rows == 0 {
        return Err(LearnError::EmptyTrainingSet);
    }
    if x_rows != y_len {
        return Err(LearnError::DimensionMismatch {
            expected: x_rows,
            found: y_len,
        });
    }
    Ok(())
}
