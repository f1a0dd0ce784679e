use std::collections::BTreeSet;

use super::EvalError;
use crate::primitives::Target;
use crate::problem::Metric;

/// A metric value plus notes about conventions that were applied.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricResult {
    pub value: f64,
    pub flags: Vec<String>,
}

/// Computes one metric over paired true and predicted values.
pub fn compute_metric(metric: Metric, y_true: &Target, y_pred: &Target) -> Result<f64, EvalError> {
    compute_metric_detailed(metric, y_true, y_pred).map(|r| r.value)
}

pub fn compute_metric_detailed(metric: Metric, y_true: &Target, y_pred: &Target) -> Result<MetricResult, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            y_true: y_true.len(),
            y_pred: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let plain = |value| Ok(MetricResult { value, flags: vec![] });
    match (y_true, y_pred) {
        (Target::Numeric(t), Target::Numeric(p)) => {
            let n = t.len() as f64;
            match metric {
                Metric::Mae => plain(t.iter().zip(p).map(|(a, b)| (a - b).abs()).sum::<f64>() / n),
                Metric::Mse => plain(mse(t, p)),
                Metric::Rmse => plain(mse(t, p).sqrt()),
                Metric::R2 => {
                    let mean = t.iter().sum::<f64>() / n;
                    let sst: f64 = t.iter().map(|a| (a - mean) * (a - mean)).sum();
                    if sst == 0.0 {
                        return Err(EvalError::UndefinedMetric {
                            metric,
                            reason: "true values are constant".into(),
                        });
                    }
                    let sse: f64 = t.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
                    plain(1.0 - sse / sst)
                }
                _ => Err(EvalError::WrongTargetKind { metric }),
            }
        }
        (Target::Labels(t), Target::Labels(p)) => match metric {
            Metric::Accuracy => plain(t.iter().zip(p).filter(|(a, b)| a == b).count() as f64 / t.len() as f64),
            Metric::Precision | Metric::Recall | Metric::F1 => Ok(macro_average(metric, t, p)),
            _ => Err(EvalError::WrongTargetKind { metric }),
        },
        _ => Err(EvalError::WrongTargetKind { metric }),
    }
}

fn mse(t: &[f64], p: &[f64]) -> f64 {
    t.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / t.len() as f64
}

/// Per-class counts for every label seen in either sequence.
pub struct ClassCounts {
    pub label: String,
    pub true_positive: usize,
    pub predicted: usize,
    pub actual: usize,
}

pub fn class_counts(y_true: &[String], y_pred: &[String]) -> Vec<ClassCounts> {
    let labels: BTreeSet<&String> = y_true.iter().chain(y_pred).collect();
    labels
        .into_iter()
        .map(|l| ClassCounts {
            label: l.clone(),
            true_positive: y_true.iter().zip(y_pred).filter(|(a, b)| *a == l && *b == l).count(),
            predicted: y_pred.iter().filter(|b| *b == l).count(),
            actual: y_true.iter().filter(|a| *a == l).count(),
        })
        .collect()
}

/// Macro average over the union of true and predicted labels. A class with no
/// predicted (or no actual) members scores 0 for precision (or recall) and is
/// flagged.
fn macro_average(metric: Metric, y_true: &[String], y_pred: &[String]) -> MetricResult {
    let mut flags = Vec::new();
    let counts = class_counts(y_true, y_pred);
    let mut total = 0.0;
    for c in &counts {
        let precision = if c.predicted == 0 {
            if metric != Metric::Recall {
                flags.push(format!("class {:?} has no predicted members; precision taken as 0", c.label));
            }
            0.0
        } else {
            c.true_positive as f64 / c.predicted as f64
        };
        let recall = if c.actual == 0 {
            if metric != Metric::Precision {
                flags.push(format!("class {:?} has no true members; recall taken as 0", c.label));
            }
            0.0
        } else {
            c.true_positive as f64 / c.actual as f64
        };
        total += match metric {
            Metric::Precision => precision,
            Metric::Recall => recall,
            _ => {
                if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                }
            }
        };
    }
    MetricResult {
        value: total / counts.len() as f64,
        flags,
    }
}
