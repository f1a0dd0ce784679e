//! CART decision trees: variance reduction for regression, Gini for
//! classification.
//!
//! Split search scans features in index order and thresholds in ascending
//! order and only replaces the incumbent on a strictly larger gain, so ties go
//! to the lowest feature index, then the lowest threshold. A node is split
//! whenever it is impure, above `2 * min_leaf` samples and shallower than
//! `max_depth`, even if the best split has zero gain.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{check_rows, LearnError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node<T, L> {
    Leaf {
        samples: usize,
        value: L,
    },
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: T,
        samples: usize,
        left: Box<Node<T, L>>,
        right: Box<Node<T, L>>,
    },
}

impl<T: Scalar, L> Node<T, L> {
    pub fn samples(&self) -> usize {
        match self {
            Node::Leaf { samples, .. } | Node::Split { samples, .. } => *samples,
        }
    }

    /// Depth of the subtree; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    pub fn leaf_for(&self, row: ArrayView1<T>) -> &L {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Visits every leaf with its sample count.
    pub fn leaves(&self) -> Vec<(&L, usize)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<(&'a L, usize)>) {
        match self {
            Node::Leaf { value, samples } => out.push((value, *samples)),
            Node::Split { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassLeaf {
    pub class: usize,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<T, L> {
    pub n_features: usize,
    pub root: Node<T, L>,
}

pub type RegressionTree<T> = Tree<T, T>;
pub type ClassificationTree<T> = Tree<T, ClassLeaf>;

impl<T: Scalar> RegressionTree<T> {
    pub fn fit(x: ArrayView2<T>, y: ArrayView1<T>, params: TreeParams) -> Result<Self, LearnError> {
        check_rows(x.nrows(), y.len())?;
        let crit = Variance { y };
        let idx: Vec<usize> = (0..x.nrows()).collect();
        Ok(Tree {
            n_features: x.ncols(),
            root: grow(&x, &crit, idx, 0, params),
        })
    }

    pub fn predict_row(&self, row: ArrayView1<T>) -> T {
        *self.root.leaf_for(row)
    }

    pub fn predict(&self, x: ArrayView2<T>) -> Vec<T> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }
}

impl<T: Scalar> ClassificationTree<T> {
    /// `labels` are class indices in `0..n_classes`.
    pub fn fit(
        x: ArrayView2<T>,
        labels: &[usize],
        n_classes: usize,
        params: TreeParams,
    ) -> Result<Self, LearnError> {
        check_rows(x.nrows(), labels.len())?;
        let crit = Gini { labels, n_classes };
        let idx: Vec<usize> = (0..x.nrows()).collect();
        Ok(Tree {
            n_features: x.ncols(),
            root: grow(&x, &crit, idx, 0, params),
        })
    }

    pub fn predict_row(&self, row: ArrayView1<T>) -> usize {
        self.root.leaf_for(row).class
    }

    pub fn predict(&self, x: ArrayView2<T>) -> Vec<usize> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }
}

trait Criterion<T> {
    type Leaf;
    fn leaf(&self, idx: &[usize]) -> Self::Leaf;
    fn is_pure(&self, idx: &[usize]) -> bool;
    /// `gains[i]` is the impurity decrease from splitting `order` into
    /// `order[..=i]` and `order[i + 1..]`.
    fn gains(&self, order: &[usize]) -> Vec<T>;
}

struct Variance<'a, T> {
    y: ArrayView1<'a, T>,
}

impl<T: Scalar> Criterion<T> for Variance<'_, T> {
    type Leaf = T;

    fn leaf(&self, idx: &[usize]) -> T {
        let s: T = idx.iter().map(|&i| self.y[i]).sum();
        s / T::of_usize(idx.len())
    }

    fn is_pure(&self, idx: &[usize]) -> bool {
        let first = self.y[idx[0]];
        idx.iter().all(|&i| self.y[i] == first)
    }

    fn gains(&self, order: &[usize]) -> Vec<T> {
        let n = order.len();
        let mean = self.leaf(order);
        let total: T = order.iter().map(|&i| self.y[i] - mean).sum();
        let base = total * total / T::of_usize(n);
        let mut left = T::zero();
        let mut out = Vec::with_capacity(n.saturating_sub(1));
        for (k, &i) in order[..n - 1].iter().enumerate() {
            left += self.y[i] - mean;
            let right = total - left;
            let nl = T::of_usize(k + 1);
            let nr = T::of_usize(n - k - 1);
            out.push(left * left / nl + right * right / nr - base);
        }
        out
    }
}

struct Gini<'a> {
    labels: &'a [usize],
    n_classes: usize,
}

impl Gini<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }
}

fn sum_sq_over<T: Scalar>(counts: &[usize], n: usize) -> T {
    let s: T = counts.iter().map(|&c| T::of_usize(c) * T::of_usize(c)).sum();
    s / T::of_usize(n)
}

impl<T: Scalar> Criterion<T> for Gini<'_> {
    type Leaf = ClassLeaf;

    fn leaf(&self, idx: &[usize]) -> ClassLeaf {
        let counts = self.counts(idx);
        let mut class = 0;
        for (k, &c) in counts.iter().enumerate() {
            if c > counts[class] {
                class = k;
            }
        }
        ClassLeaf { class, counts }
    }

    fn is_pure(&self, idx: &[usize]) -> bool {
        let first = self.labels[idx[0]];
        idx.iter().all(|&i| self.labels[i] == first)
    }

    fn gains(&self, order: &[usize]) -> Vec<T> {
        let n = order.len();
        let total = self.counts(order);
        let base: T = sum_sq_over(&total, n);
        let mut left = vec![0usize; self.n_classes];
        let mut right = total;
        let mut out = Vec::with_capacity(n.saturating_sub(1));
        for (k, &i) in order[..n - 1].iter().enumerate() {
            let c = self.labels[i];
            left[c] += 1;
            right[c] -= 1;
            let g: T = sum_sq_over::<T>(&left, k + 1) + sum_sq_over::<T>(&right, n - k - 1) - base;
            out.push(g);
        }
        out
    }
}

fn grow<T: Scalar, C: Criterion<T>>(
    x: &ArrayView2<T>,
    crit: &C,
    idx: Vec<usize>,
    depth: usize,
    params: TreeParams,
) -> Node<T, C::Leaf> {
    let samples = idx.len();
    let min_leaf = params.min_leaf.max(1);
    let leaf = |idx: &[usize]| Node::Leaf {
        samples: idx.len(),
        value: crit.leaf(idx),
    };
    if depth >= params.max_depth || samples < 2 * min_leaf || crit.is_pure(&idx) {
        return leaf(&idx);
    }

    let mut best: Option<(T, usize, T)> = None; // (gain, feature, threshold)
    let mut order = idx.clone();
    for feature in 0..x.ncols() {
        order.sort_by(|&a, &b| {
            x[[a, feature]]
                .partial_cmp(&x[[b, feature]])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let gains = crit.gains(&order);
        for k in (min_leaf - 1)..(samples - min_leaf) {
            let lo = x[[order[k], feature]];
            let hi = x[[order[k + 1], feature]];
            if lo == hi {
                continue;
            }
            let g = gains[k];
            if best.is_none_or(|(bg, _, _)| g > bg) {
                let mut threshold = (lo + hi) / T::of(2.0);
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some((g, feature, threshold));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return leaf(&idx);
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        idx.iter().partition(|&&i| x[[i, feature]] <= threshold);
    Node::Split {
        feature,
        threshold,
        samples,
        left: Box::new(grow(x, crit, left_idx, depth + 1, params)),
        right: Box::new(grow(x, crit, right_idx, depth + 1, params)),
    }
}
