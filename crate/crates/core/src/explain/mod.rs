//! Explanation artifacts: confusion matrix, surrogate rules, partial
//! dependence and the prediction scatter.

mod pdp;
mod rules;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Value};
use crate::evaluation::ScoreReport;
use crate::pipeline::PipelineError;
use crate::primitives::{FeatureKind, Target};
use crate::problem::TaskType;

pub use pdp::{partial_dependence, PdpCurve, PDP_GRID_POINTS};
pub use rules::{extract_rules, Operator, Predicate, Rule, RuleSet, FIDELITY_THRESHOLD, SURROGATE_DEPTHS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExplainError {
    #[error("this explanation needs a {expected} model")]
    WrongTaskType { expected: TaskType },
    #[error("feature {0:?} is not an input of this pipeline")]
    FeatureNotFound(String),
    #[error("feature {feature:?} is {kind:?}; only numeric and temporal features are supported")]
    UnsupportedFeature { feature: String, kind: FeatureKind },
    #[error("max_rules must be at least 2, got {0}")]
    InvalidMaxRules(usize),
    #[error("no evaluated rows")]
    NoRows,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// Sorted class labels; rows are true classes, columns predicted.
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }
}

fn labels_of(report: &ScoreReport) -> Result<(Vec<String>, Vec<String>), ExplainError> {
    match (report.y_true(), report.y_pred()) {
        (Target::Labels(t), Target::Labels(p)) if !report.predictions.is_empty() => Ok((t, p)),
        _ => Err(ExplainError::WrongTaskType {
            expected: TaskType::Classification,
        }),
    }
}

pub fn confusion_matrix(report: &ScoreReport) -> Result<ConfusionMatrix, ExplainError> {
    if report.predictions.iter().any(|p| matches!(p.y_true, Value::Number(_))) {
        return Err(ExplainError::WrongTaskType {
            expected: TaskType::Classification,
        });
    }
    let (t, p) = labels_of(report)?;
    let mut labels: Vec<String> = t.iter().chain(&p).cloned().collect();
    labels.sort();
    labels.dedup();
    let mut counts = vec![vec![0; labels.len()]; labels.len()];
    for (a, b) in t.iter().zip(&p) {
        let i = labels.binary_search(a).expect("label");
        let j = labels.binary_search(b).expect("label");
        counts[i][j] += 1;
    }
    Ok(ConfusionMatrix { labels, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub row: usize,
    pub y_true: f64,
    pub y_pred: f64,
    pub fold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionScatter {
    pub points: Vec<ScatterPoint>,
    /// Every fold predicts one constant value although the true values vary.
    pub degenerate: bool,
}

pub fn confusion_scatter(report: &ScoreReport) -> Result<ConfusionScatter, ExplainError> {
    let mut points = Vec::with_capacity(report.predictions.len());
    for p in &report.predictions {
        match (&p.y_true, &p.y_pred) {
            (Value::Number(t), Value::Number(y)) => points.push(ScatterPoint {
                row: p.row,
                y_true: *t,
                y_pred: *y,
                fold: p.fold,
            }),
            _ => {
                return Err(ExplainError::WrongTaskType {
                    expected: TaskType::Regression,
                })
            }
        }
    }
    let true_varies = points.windows(2).any(|w| w[0].y_true != w[1].y_true);
    let constant_per_fold = (0..report.folds).all(|f| {
        let mut preds = points.iter().filter(|p| p.fold == f).map(|p| p.y_pred);
        match preds.next() {
            Some(first) => preds.all(|v| v == first),
            None => true,
        }
    });
    Ok(ConfusionScatter {
        degenerate: true_varies && constant_per_fold,
        points,
    })
}
