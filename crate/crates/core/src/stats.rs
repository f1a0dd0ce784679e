//! Small descriptive-statistics helpers.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let sum: T = values.iter().copied().sum();
    Some(sum / T::of_usize(values.len()))
}

/// Population variance (divides by `n`).
pub fn variance<T: Scalar>(values: &[T]) -> Option<T> {
    let m = mean(values)?;
    let ss: T = values.iter().map(|&v| (v - m) * (v - m)).sum();
    Some(ss / T::of_usize(values.len()))
}

/// Population standard deviation.
pub fn std_dev<T: Scalar>(values: &[T]) -> Option<T> {
    variance(values).map(|v| v.max(T::zero()).sqrt())
}

/// Quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending and nonempty.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], level: T) -> T {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = level * T::of_usize(n - 1);
    let lo = h.floor();
    let lo_idx = lo.to_usize().unwrap_or(0).min(n - 1);
    let hi_idx = (lo_idx + 1).min(n - 1);
    let frac = h - lo;
    sorted[lo_idx] + frac * (sorted[hi_idx] - sorted[lo_idx])
}

/// One bin of an equal-width histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Bin edges for `bins` equal-width bins over `[min, max]`. The last edge is
/// exactly `max`.
pub fn equal_width_edges<T: Scalar>(min: T, max: T, bins: usize) -> Vec<T> {
    assert!(bins > 0);
    let width = max - min;
    let mut edges: Vec<T> = (0..bins)
        .map(|i| min + width * T::of_usize(i) / T::of_usize(bins))
        .collect();
    edges.push(max);
    edges
}

/// Index of the bin holding `value`: bin `i` is `[edge_i, edge_{i+1})`
/// except the last, which is closed and also receives `max`.
pub fn bin_index<T: Scalar>(edges: &[T], value: T) -> usize {
    let bins = edges.len() - 1;
    // number of interior edges (1..bins) that are <= value
    let above = edges[1..bins].partition_point(|&e| e <= value);
    above.min(bins - 1)
}

/// Equal-width histogram over the observed range of `values`.
///
/// Returns an empty vector when `values` is empty. A zero-width range puts
/// every value in the last bin.
pub fn equal_width_histogram<T: Scalar>(values: &[T], bins: usize) -> Vec<Bin> {
    let Some((min, max)) = min_max(values) else {
        return Vec::new();
    };
    let edges = equal_width_edges(min, max, bins);
    let mut counts = vec![0usize; bins];
    for &v in values {
        counts[bin_index(&edges, v)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| Bin {
            lower: edges[i].to_f64_lossy(),
            upper: edges[i + 1].to_f64_lossy(),
            count,
        })
        .collect()
}

pub fn min_max<T: Scalar>(values: &[T]) -> Option<(T, T)> {
    let mut it = values.iter().copied();
    let first = it.next()?;
    Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
}
