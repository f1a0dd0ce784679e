//! Metrics and out-of-sample evaluation protocols.

mod metrics;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, Value};
use crate::pipeline::{fit_table, Pipeline, PipelineError};
use crate::primitives::{FeatureTable, Target};
use crate::problem::{EvalMethod, Metric, ValidatedSpec};

pub use metrics::{class_counts, compute_metric, compute_metric_detailed, ClassCounts, MetricResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{metric} is undefined: {reason}")]
    UndefinedMetric { metric: Metric, reason: String },
    #[error("y_true has {y_true} values but y_pred has {y_pred}")]
    LengthMismatch { y_true: usize, y_pred: usize },
    #[error("no values to score")]
    EmptyInput,
    #[error("{metric} does not apply to these values")]
    WrongTargetKind { metric: Metric },
    #[error("{needed} rows needed but only {available} usable")]
    TooFewRows { needed: usize, available: usize },
    #[error("fold {fold}: {source}")]
    Fold { fold: usize, source: PipelineError },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("evaluation cancelled")]
    Cancelled,
}

/// One out-of-sample prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    /// Row index in the dataset.
    pub row: usize,
    pub y_true: Value,
    pub y_pred: Value,
    pub fold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    /// `None` when the metric is undefined on these predictions.
    pub metrics: BTreeMap<Metric, Option<f64>>,
    /// Sorted by row.
    pub predictions: Vec<PredictionRecord>,
    pub folds: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ScoreReport {
    pub fn metric(&self, m: Metric) -> Option<f64> {
        self.metrics.get(&m).copied().flatten()
    }

    pub fn y_true(&self) -> Target {
        collect_target(self.predictions.iter().map(|p| &p.y_true))
    }

    pub fn y_pred(&self) -> Target {
        collect_target(self.predictions.iter().map(|p| &p.y_pred))
    }
}

fn collect_target<'a>(values: impl Iterator<Item = &'a Value>) -> Target {
    let values: Vec<&Value> = values.collect();
    if values.iter().all(|v| matches!(v, Value::Number(_))) {
        Target::Numeric(
            values
                .iter()
                .map(|v| match v {
                    Value::Number(x) => *x,
                    Value::Text(_) => unreachable!(),
                })
                .collect(),
        )
    } else {
        Target::Labels(
            values
                .iter()
                .map(|v| match v {
                    Value::Number(x) => x.to_string(),
                    Value::Text(s) => s.clone(),
                })
                .collect(),
        )
    }
}

/// Fold index for each of `n` positions.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldAssignment {
    pub folds: Vec<usize>,
    pub k: usize,
    pub stratified: bool,
    pub warning: Option<String>,
}

/// Shuffles positions `0..n` with `seed` and deals them round-robin into `k`
/// folds. With `labels`, positions are grouped by class before dealing when
/// every class has at least `k` members.
pub fn assign_folds(n: usize, k: usize, seed: u64, labels: Option<&[String]>) -> Result<FoldAssignment, EvalError> {
    if k < 2 || k > n {
        return Err(EvalError::TooFewRows {
            needed: k.max(2),
            available: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut stratified = false;
    let mut warning = None;
    if let Some(labels) = labels {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for l in labels {
            *counts.entry(l.as_str()).or_default() += 1;
        }
        if counts.values().all(|&c| c >= k) {
            order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
            stratified = true;
        } else {
            let small: Vec<&str> = counts.iter().filter(|(_, &c)| c < k).map(|(l, _)| *l).collect();
            warning = Some(format!(
                "classes {small:?} have fewer than {k} rows; folds are not stratified"
            ));
        }
    }
    let mut folds = vec![0; n];
    for (i, &pos) in order.iter().enumerate() {
        folds[pos] = i % k;
    }
    Ok(FoldAssignment {
        folds,
        k,
        stratified,
        warning,
    })
}

/// Positions held out for testing: the last `⌈test_fraction · n⌉` of a seeded shuffle.
pub fn holdout_split(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    let n_test = (test_fraction * n as f64).ceil() as usize;
    if n_test == 0 || n_test >= n {
        return Err(EvalError::TooFewRows {
            needed: 2,
            available: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order.split_off(n - n_test);
    Ok((order, test))
}

/// Scores `pipeline` on out-of-sample predictions using the spec's
/// evaluation method.
pub fn evaluate(pipeline: &Pipeline, dataset: &Dataset, spec: &ValidatedSpec, seed: u64) -> Result<ScoreReport, EvalError> {
    evaluate_with(pipeline, dataset, spec, seed, &|| false)
}

/// Like [`evaluate`], checking `stop` before each fold is fitted.
pub fn evaluate_with(
    pipeline: &Pipeline,
    dataset: &Dataset,
    spec: &ValidatedSpec,
    seed: u64,
    stop: &(dyn Fn() -> bool + Sync),
) -> Result<ScoreReport, EvalError> {
    pipeline.check_task(spec.task_type())?;
    let rows = spec.usable_rows();
    let x = FeatureTable::from_dataset(dataset, spec.features(), rows).map_err(PipelineError::from)?;
    let y = Target::from_dataset(dataset, spec.target(), rows).map_err(PipelineError::from)?;
    let n = rows.len();
    let mut warnings = Vec::new();

    // (train positions, test positions) per fold
    let splits: Vec<(Vec<usize>, Vec<usize>)> = match spec.eval_method {
        EvalMethod::Kfold { k } => {
            let labels = match &y {
                Target::Labels(l) => Some(l.as_slice()),
                Target::Numeric(_) => None,
            };
            let a = assign_folds(n, k, seed, labels)?;
            warnings.extend(a.warning);
            (0..k)
                .map(|f| (0..n).partition(|&i| a.folds[i] != f))
                .collect()
        }
        EvalMethod::Holdout { test_fraction } => {
            let (mut train, mut test) = holdout_split(n, test_fraction, seed)?;
            train.sort_unstable();
            test.sort_unstable();
            vec![(train, test)]
        }
    };

    let outcomes: Vec<Result<(Vec<usize>, Target), EvalError>> = splits
        .par_iter()
        .enumerate()
        .map(|(fold, (train, test))| {
            if stop() {
                return Err(EvalError::Cancelled);
            }
            let fitted = fit_table(pipeline, &x.select_rows(train), &y.select(train))
                .map_err(|source| EvalError::Fold { fold, source })?;
            let pred = fitted
                .predict(&x.select_rows(test))
                .map_err(|source| EvalError::Fold { fold, source })?;
            Ok((test.clone(), pred))
        })
        .collect();

    let mut records = Vec::with_capacity(n);
    for (fold, outcome) in outcomes.into_iter().enumerate() {
        let (test, pred) = outcome?;
        for (j, &pos) in test.iter().enumerate() {
            records.push(PredictionRecord {
                row: rows[pos],
                y_true: y.value(pos),
                y_pred: pred.value(j),
                fold,
            });
        }
    }
    records.sort_by_key(|r| r.row);

    let mut report = ScoreReport {
        metrics: BTreeMap::new(),
        predictions: records,
        folds: splits.len(),
        warnings,
    };
    let (t, p) = (report.y_true(), report.y_pred());
    let mut flags = BTreeSet::new();
    let metrics: BTreeSet<Metric> = spec.report_metrics.iter().copied().collect();
    for m in metrics {
        let value = match compute_metric_detailed(m, &t, &p) {
            Ok(r) => {
                flags.extend(r.flags);
                Some(r.value)
            }
            Err(EvalError::UndefinedMetric { reason, .. }) => {
                report.warnings.push(format!("{m} undefined: {reason}"));
                None
            }
            Err(e) => return Err(e),
        };
        report.metrics.insert(m, value);
    }
    report.warnings.extend(flags);
    Ok(report)
}
