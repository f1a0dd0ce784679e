//! Score histogram, ranking and parallel-coordinates payloads for a run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{compare_scores, SearchError, SearchRun};
use crate::problem::Metric;
use crate::stats::{bin_index, equal_width_edges, Bin};

pub const SCORE_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    pub metric: Metric,
    pub bins: Vec<Bin>,
    /// Bin index of each scored solution.
    pub solution_bins: BTreeMap<String, usize>,
}

/// Ten equal-width bins over the observed range of `metric`.
pub fn summarize_scores(run: &SearchRun, metric: Metric) -> Result<ScoreHistogram, SearchError> {
    check_metric(run, metric)?;
    let scores: Vec<(&str, f64)> = run
        .scored()
        .filter_map(|s| s.score(metric).map(|v| (s.solution_id.as_str(), v)))
        .collect();
    if scores.is_empty() {
        return Err(SearchError::NoScoredSolutions);
    }
    let values: Vec<f64> = scores.iter().map(|s| s.1).collect();
    let (lo, hi) = crate::stats::min_max(&values).expect("nonempty");
    let edges = equal_width_edges(lo, hi, SCORE_BINS);
    let mut bins: Vec<Bin> = edges
        .windows(2)
        .map(|w| Bin {
            lower: w[0],
            upper: w[1],
            count: 0,
        })
        .collect();
    let mut solution_bins = BTreeMap::new();
    for (id, v) in scores {
        let b = bin_index(&edges, v);
        bins[b].count += 1;
        solution_bins.insert(id.to_string(), b);
    }
    Ok(ScoreHistogram {
        metric,
        bins,
        solution_bins,
    })
}

fn check_metric(run: &SearchRun, metric: Metric) -> Result<(), SearchError> {
    if run.spec.report_metrics.contains(&metric) {
        Ok(())
    } else {
        Err(SearchError::UnknownMetric(metric))
    }
}

/// Solution ids ordered best first by `metric`. Ties keep emission order;
/// failed solutions and undefined scores come last.
pub fn rank_solutions(run: &SearchRun, metric: Metric) -> Result<Vec<String>, SearchError> {
    check_metric(run, metric)?;
    let mut sols: Vec<_> = run.solutions.iter().collect();
    sols.sort_by(|a, b| {
        compare_scores(a.score(metric), b.score(metric), metric.higher_is_better()).then(a.seq.cmp(&b.seq))
    });
    Ok(sols.into_iter().map(|s| s.solution_id.clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelRow {
    pub solution_id: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelCoordinates {
    pub metrics: Vec<Metric>,
    pub rows: Vec<ParallelRow>,
    /// Observed `[min, max]` per metric.
    pub ranges: Vec<[f64; 2]>,
}

/// One vector of every reported metric per scored solution. Solutions with
/// an undefined metric are left out.
pub fn parallel_coordinates(run: &SearchRun) -> Result<ParallelCoordinates, SearchError> {
    let metrics = run.spec.report_metrics.clone();
    let rows: Vec<ParallelRow> = run
        .scored()
        .filter_map(|s| {
            let values: Option<Vec<f64>> = metrics.iter().map(|&m| s.score(m)).collect();
            values.map(|values| ParallelRow {
                solution_id: s.solution_id.clone(),
                values,
            })
        })
        .collect();
    if rows.is_empty() {
        return Err(SearchError::NoScoredSolutions);
    }
    let ranges = (0..metrics.len())
        .map(|j| {
            rows.iter().fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], r| {
                [lo.min(r.values[j]), hi.max(r.values[j])]
            })
        })
        .collect();
    Ok(ParallelCoordinates { metrics, rows, ranges })
}
