//! L1-penalized least squares by cyclic coordinate descent.

use ndarray::{ArrayView1, ArrayView2, Axis};

use super::linear::{center, LinearModel};
use super::{check_rows, LearnError};
use crate::scalar::Scalar;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, Copy)]
pub struct LassoParams<T> {
    pub lambda: T,
    /// Convergence when the largest coefficient change in a sweep is below this.
    pub tolerance: T,
    pub max_sweeps: usize,
}

impl<T: Scalar> LassoParams<T> {
    pub fn new(lambda: T) -> Self {
        LassoParams {
            lambda,
            tolerance: T::of(DEFAULT_TOLERANCE),
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LassoFit<T> {
    pub model: LinearModel<T>,
    pub sweeps: usize,
    pub converged: bool,
}

pub fn soft_threshold<T: Scalar>(value: T, threshold: T) -> T {
    if value > threshold {
        value - threshold
    } else if value < -threshold {
        value + threshold
    } else {
        T::zero()
    }
}

/// Minimizes `(1/2n)‖y − b₀ − Xb‖² + λ‖b‖₁` with an unpenalized intercept.
pub fn lasso<T: Scalar>(
    x: ArrayView2<T>,
    y: ArrayView1<T>,
    params: &LassoParams<T>,
) -> Result<LassoFit<T>, LearnError> {
    check_rows(x.nrows(), y.len())?;
    let c = center(x, y);
    let n = T::of_usize(x.nrows());
    let p = x.ncols();
    let col_sq: Vec<T> = c
        .x
        .axis_iter(Axis(1))
        .map(|col| col.iter().map(|&v| v * v).sum::<T>() / n)
        .collect();
    let mut beta = vec![T::zero(); p];
    let mut residual = c.y.clone();
    let mut sweeps = 0;
    let mut converged = p == 0;
    while !converged && sweeps < params.max_sweeps {
        sweeps += 1;
        let mut max_change = T::zero();
        for j in 0..p {
            if col_sq[j] == T::zero() {
                continue;
            }
            let col = c.x.column(j);
            let rho = col.dot(&residual) / n + col_sq[j] * beta[j];
            let updated = soft_threshold(rho, params.lambda) / col_sq[j];
            let delta = updated - beta[j];
            if delta != T::zero() {
                residual.scaled_add(-delta, &col);
                beta[j] = updated;
                max_change = max_change.max(delta.abs());
            }
        }
        converged = max_change < params.tolerance;
    }
    let coefficients = ndarray::Array1::from(beta);
    let intercept = c.y_mean - coefficients.dot(&c.x_mean);
    Ok(LassoFit {
        model: LinearModel {
            intercept,
            coefficients: coefficients.to_vec(),
            ridge_fallback: false,
        },
        sweeps,
        converged,
    })
}
