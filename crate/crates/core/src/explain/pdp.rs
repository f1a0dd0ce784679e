//! Partial dependence of a model's prediction on one feature.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExplainError;
use crate::data::temporal::{format_timestamp, from_epoch_seconds, to_epoch_seconds};
use crate::data::{Dataset, Granularity};
use crate::pipeline::FittedPipeline;
use crate::primitives::{FeatureData, FeatureKind, FeatureTable, Target};
use crate::problem::ValidatedSpec;
use crate::stats::quantile_sorted;

pub const PDP_GRID_POINTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpCurve {
    pub feature: String,
    pub kind: FeatureKind,
    /// Strictly increasing; epoch seconds for temporal features.
    pub grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_labels: Option<Vec<String>>,
    /// Mean prediction per grid point (regression).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// Share of rows predicted as each class per grid point (classification).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_values: Option<BTreeMap<String, Vec<f64>>>,
    /// Rows whose value is nearest each grid point.
    pub counts: Vec<usize>,
    pub missing_count: usize,
    /// The feature takes a single value, so the grid has one point.
    pub constant: bool,
}

fn grid_of(values: &mut [f64]) -> Vec<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut grid: Vec<f64> = (0..PDP_GRID_POINTS)
        .map(|i| quantile_sorted(values, i as f64 / (PDP_GRID_POINTS - 1) as f64))
        .collect();
    grid.dedup();
    grid
}

/// Index of the grid point nearest `v`; ties go to the lower point.
fn nearest(grid: &[f64], v: f64) -> usize {
    let i = grid.partition_point(|&g| g < v);
    if i == 0 {
        0
    } else if i == grid.len() {
        grid.len() - 1
    } else if v - grid[i - 1] <= grid[i] - v {
        i - 1
    } else {
        i
    }
}

/// Partial dependence of `fitted` on `feature` over the spec's usable rows.
pub fn partial_dependence(
    fitted: &FittedPipeline,
    dataset: &Dataset,
    spec: &ValidatedSpec,
    feature: &str,
) -> Result<PdpCurve, ExplainError> {
    let rows = spec.usable_rows();
    let field = fitted
        .feature_schema
        .iter()
        .find(|f| f.name == feature)
        .ok_or_else(|| ExplainError::FeatureNotFound(feature.to_string()))?;
    if rows.is_empty() {
        return Err(ExplainError::NoRows);
    }
    let x = FeatureTable::from_dataset(dataset, &fitted.feature_names(), rows)?;
    let column = x.column(feature).expect("schema column");
    let observed: Vec<Option<f64>> = match &column.data {
        FeatureData::Numeric(v) => v.clone(),
        FeatureData::Temporal(v) => v.iter().map(|t| t.as_ref().map(to_epoch_seconds)).collect(),
        FeatureData::Categorical(_) => {
            return Err(ExplainError::UnsupportedFeature {
                feature: feature.to_string(),
                kind: field.kind,
            })
        }
    };
    let mut present: Vec<f64> = observed.iter().flatten().copied().collect();
    let missing_count = observed.len() - present.len();
    if present.is_empty() {
        return Err(ExplainError::NoRows);
    }
    let mut grid = grid_of(&mut present);
    if field.kind == FeatureKind::Temporal {
        grid = grid.into_iter().map(f64::round).collect();
        grid.dedup();
    }
    let mut counts = vec![0; grid.len()];
    for v in observed.iter().flatten() {
        counts[nearest(&grid, *v)] += 1;
    }
    let n = x.rows();
    let predictions: Vec<Target> = grid
        .par_iter()
        .map(|&g| {
            let data = match field.kind {
                FeatureKind::Temporal => FeatureData::Temporal(vec![from_epoch_seconds(g); n]),
                _ => FeatureData::Numeric(vec![Some(g); n]),
            };
            fitted.predict(&x.clone().with_column(feature, data))
        })
        .collect::<Result<_, _>>()?;

    let (values, class_values) = match predictions.first() {
        Some(Target::Numeric(_)) => (
            Some(
                predictions
                    .iter()
                    .map(|p| match p {
                        Target::Numeric(v) => v.iter().sum::<f64>() / n as f64,
                        Target::Labels(_) => unreachable!(),
                    })
                    .collect(),
            ),
            None,
        ),
        _ => {
            let mut classes: Vec<&String> = predictions
                .iter()
                .flat_map(|p| match p {
                    Target::Labels(l) => l.iter(),
                    Target::Numeric(_) => unreachable!(),
                })
                .collect();
            classes.sort();
            classes.dedup();
            let mut out: BTreeMap<String, Vec<f64>> = classes.iter().map(|c| ((*c).clone(), Vec::new())).collect();
            for p in &predictions {
                let Target::Labels(l) = p else { unreachable!() };
                for (c, series) in out.iter_mut() {
                    series.push(l.iter().filter(|x| *x == c).count() as f64 / n as f64);
                }
            }
            (None, Some(out))
        }
    };
    let grid_labels = (field.kind == FeatureKind::Temporal).then(|| {
        grid.iter()
            .map(|&g| {
                from_epoch_seconds(g)
                    .map(|t| format_timestamp(&t, Granularity::Second))
                    .unwrap_or_default()
            })
            .collect()
    });
    Ok(PdpCurve {
        feature: feature.to_string(),
        kind: field.kind,
        constant: grid.len() == 1,
        grid,
        grid_labels,
        values,
        class_values,
        counts,
        missing_count,
    })
}
