//! Multinomial logistic regression trained by fixed-step gradient descent.
//!
//! The step is `1/L` with `L = ½·mean‖x̃‖² + λ` (x̃ includes the intercept
//! term). That bounds the curvature of the softmax cross-entropy from above,
//! so every step decreases the training loss.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{check_rows, LearnError};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_ITERATIONS: usize = 2000;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct LogisticParams<T> {
    /// L2 penalty on the non-intercept weights.
    pub lambda: T,
    pub max_iterations: usize,
    /// Stop when the largest gradient component falls below this.
    pub tolerance: T,
}

impl<T: Scalar> LogisticParams<T> {
    pub fn new(lambda: T) -> Self {
        LogisticParams {
            lambda,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: T::of(DEFAULT_TOLERANCE),
        }
    }
}

/// One weight row per class; column 0 is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxModel<T> {
    pub n_classes: usize,
    pub weights: Vec<Vec<T>>,
}

#[derive(Debug, Clone)]
pub struct SoftmaxFit<T> {
    pub model: SoftmaxModel<T>,
    /// Penalized training loss before the first step and after each step.
    pub losses: Vec<T>,
    pub iterations: usize,
}

impl<T: Scalar> SoftmaxModel<T> {
    fn scores(&self, row: ArrayView1<T>) -> Vec<T> {
        self.weights
            .iter()
            .map(|w| {
                w[1..]
                    .iter()
                    .zip(row.iter())
                    .fold(w[0], |acc, (&wi, &xi)| acc + wi * xi)
            })
            .collect()
    }

    pub fn probabilities(&self, row: ArrayView1<T>) -> Vec<T> {
        softmax(&self.scores(row))
    }

    /// Most probable class; ties go to the lowest class index.
    pub fn predict_row(&self, row: ArrayView1<T>) -> usize {
        let s = self.scores(row);
        let mut best = 0;
        for (k, &v) in s.iter().enumerate().skip(1) {
            if v > s[best] {
                best = k;
            }
        }
        best
    }

    pub fn predict(&self, x: ArrayView2<T>) -> Vec<usize> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }
}

fn softmax<T: Scalar>(scores: &[T]) -> Vec<T> {
    let m = scores.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let e: Vec<T> = scores.iter().map(|&s| (s - m).exp()).collect();
    let z: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / z).collect()
}

fn augmented<T: Scalar>(x: ArrayView2<T>) -> Array2<T> {
    let mut a = Array2::<T>::ones((x.nrows(), x.ncols() + 1));
    a.slice_mut(ndarray::s![.., 1..]).assign(&x);
    a
}

fn loss<T: Scalar>(xa: &Array2<T>, labels: &[usize], w: &Array2<T>, lambda: T) -> T {
    let n = T::of_usize(xa.nrows());
    let scores = xa.dot(&w.t());
    let mut total = T::zero();
    for (row, &y) in scores.axis_iter(Axis(0)).zip(labels) {
        let m = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let lse = m + row.iter().map(|&s| (s - m).exp()).sum::<T>().ln();
        total += lse - row[y];
    }
    let penalty: T = w
        .slice(ndarray::s![.., 1..])
        .iter()
        .map(|&v| v * v)
        .sum::<T>();
    total / n + lambda * penalty / T::of(2.0)
}

/// Fits a softmax classifier on labels in `0..n_classes`.
pub fn fit_softmax<T: Scalar>(
    x: ArrayView2<T>,
    labels: &[usize],
    n_classes: usize,
    params: &LogisticParams<T>,
) -> Result<SoftmaxFit<T>, LearnError> {
    check_rows(x.nrows(), labels.len())?;
    let n = x.nrows();
    let p = x.ncols() + 1;
    let xa = augmented(x);
    let mut w = Array2::<T>::zeros((n_classes, p));
    let mut losses = vec![loss(&xa, labels, &w, params.lambda)];
    if n_classes <= 1 {
        return Ok(SoftmaxFit {
            model: SoftmaxModel {
                n_classes,
                weights: w.outer_iter().map(|r| r.to_vec()).collect(),
            },
            losses,
            iterations: 0,
        });
    }
    let mean_sq = xa.iter().map(|&v| v * v).sum::<T>() / T::of_usize(n);
    let lipschitz = mean_sq / T::of(2.0) + params.lambda;
    let step = T::one() / lipschitz;
    let nf = T::of_usize(n);

    let mut onehot = Array2::<T>::zeros((n, n_classes));
    for (i, &y) in labels.iter().enumerate() {
        onehot[[i, y]] = T::one();
    }

    let mut iterations = 0;
    while iterations < params.max_iterations {
        let mut probs = xa.dot(&w.t());
        for mut row in probs.axis_iter_mut(Axis(0)) {
            let p = softmax(row.as_slice().expect("contiguous row"));
            row.assign(&Array1::from(p));
        }
        let diff = probs - &onehot;
        let mut grad = diff.t().dot(&xa) / nf;
        for k in 0..n_classes {
            for j in 1..p {
                grad[[k, j]] += params.lambda * w[[k, j]];
            }
        }
        let max_grad = grad.iter().fold(T::zero(), |m, g| m.max(g.abs()));
        if max_grad < params.tolerance {
            break;
        }
        w.scaled_add(-step, &grad);
        iterations += 1;
        losses.push(loss(&xa, labels, &w, params.lambda));
    }
    Ok(SoftmaxFit {
        model: SoftmaxModel {
            n_classes,
            weights: w.outer_iter().map(|r| r.to_vec()).collect(),
        },
        losses,
        iterations,
    })
}
