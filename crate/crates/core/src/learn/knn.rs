//! k-nearest neighbours with Euclidean distance.
//!
//! Equal distances are ordered by training-row index.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{check_rows, LearnError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel<T, Y> {
    pub k: usize,
    pub points: Vec<Vec<T>>,
    pub targets: Vec<Y>,
}

impl<T: Scalar, Y: Clone> KnnModel<T, Y> {
    pub fn fit(x: ArrayView2<T>, targets: &[Y], k: usize) -> Result<Self, LearnError> {
        check_rows(x.nrows(), targets.len())?;
        Ok(KnnModel {
            k: k.max(1),
            points: x.rows().into_iter().map(|r| r.to_vec()).collect(),
            targets: targets.to_vec(),
        })
    }

    /// Indices of the `k` nearest training points (fewer if there are fewer points).
    pub fn neighbors(&self, row: ArrayView1<T>) -> Vec<usize> {
        let mut d: Vec<(T, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let s: T = p.iter().zip(row.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum();
                (s, i)
            })
            .collect();
        let k = self.k.min(d.len());
        let cmp = |a: &(T, usize), b: &(T, usize)| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        };
        if k < d.len() {
            d.select_nth_unstable_by(k, cmp);
            d.truncate(k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }
}

impl<T: Scalar> KnnModel<T, T> {
    pub fn predict_row(&self, row: ArrayView1<T>) -> T {
        let nn = self.neighbors(row);
        let s: T = nn.iter().map(|&i| self.targets[i]).sum();
        s / T::of_usize(nn.len())
    }
}

impl<T: Scalar> KnnModel<T, usize> {
    /// Majority vote; ties go to the lowest class index.
    pub fn predict_class(&self, row: ArrayView1<T>, n_classes: usize) -> usize {
        let mut votes = vec![0usize; n_classes.max(1)];
        for i in self.neighbors(row) {
            votes[self.targets[i]] += 1;
        }
        let mut best = 0;
        for (k, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = k;
            }
        }
        best
    }
}
