use std::collections::{BTreeMap, HashSet};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::temporal::{self, Granularity};
use super::{Column, ColumnData, Dataset, Dtype};
use crate::stats::{self, Bin};

pub const HISTOGRAM_BINS: usize = 10;
pub const TOP_CATEGORIES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub category: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeBin {
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Histogram {
    Numeric { bins: Vec<Bin> },
    /// Most frequent values; everything past the top-k is pooled in `other_count`.
    Categorical { top: Vec<CategoryCount>, other_count: usize },
    Temporal { bins: Vec<TimeBin> },
    Empty,
}

impl Histogram {
    pub fn total(&self) -> usize {
        match self {
            Histogram::Numeric { bins } => bins.iter().map(|b| b.count).sum(),
            Histogram::Categorical { top, other_count } => {
                top.iter().map(|c| c.count).sum::<usize>() + other_count
            }
            Histogram::Temporal { bins } => bins.iter().map(|b| b.count).sum(),
            Histogram::Empty => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalRange {
    pub earliest: NaiveDateTime,
    pub latest: NaiveDateTime,
    pub granularity: Granularity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub name: String,
    pub dtype: Dtype,
    pub row_count: usize,
    pub missing_count: usize,
    pub distinct_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric: Option<NumericStats>,
    pub histogram: Histogram,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temporal_range: Option<TemporalRange>,
}

/// One profile per column, in column order.
pub fn profile(dataset: &Dataset) -> Vec<ColumnProfile> {
    dataset.columns().iter().map(profile_column).collect()
}

pub fn profile_column(column: &Column) -> ColumnProfile {
    let row_count = column.len();
    let missing_count = column.data.missing_count();
    let mut p = ColumnProfile {
        name: column.name.clone(),
        dtype: column.dtype(),
        row_count,
        missing_count,
        distinct_count: 0,
        numeric: None,
        histogram: Histogram::Empty,
        temporal_range: None,
    };
    match &column.data {
        ColumnData::Numeric(values) => {
            let present: Vec<f64> = values.iter().flatten().copied().collect();
            // -0.0 and 0.0 count as one value
            p.distinct_count = present
                .iter()
                .map(|&x| if x == 0.0 { 0u64 } else { x.to_bits() })
                .collect::<HashSet<_>>()
                .len();
            if let Some((min, max)) = stats::min_max(&present) {
                p.numeric = Some(NumericStats {
                    min,
                    max,
                    mean: stats::mean(&present).unwrap_or(f64::NAN),
                    std: stats::std_dev(&present).unwrap_or(0.0),
                });
                p.histogram = Histogram::Numeric {
                    bins: stats::equal_width_histogram(&present, HISTOGRAM_BINS),
                };
            }
        }
        ColumnData::Categorical(values) | ColumnData::Text(values) => {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for v in values.iter().flatten() {
                *counts.entry(v.as_str()).or_default() += 1;
            }
            p.distinct_count = counts.len();
            if !counts.is_empty() {
                let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
                // BTreeMap order makes the tie-break lexicographic
                ranked.sort_by_key(|c| std::cmp::Reverse(c.1));
                let other_count = ranked.iter().skip(TOP_CATEGORIES).map(|c| c.1).sum();
                let top = ranked
                    .into_iter()
                    .take(TOP_CATEGORIES)
                    .map(|(category, count)| CategoryCount {
                        category: category.to_string(),
                        count,
                    })
                    .collect();
                p.histogram = Histogram::Categorical { top, other_count };
            }
        }
        ColumnData::Temporal {
            values,
            granularity,
        } => {
            let present: Vec<NaiveDateTime> = values.iter().flatten().copied().collect();
            p.distinct_count = present.iter().collect::<HashSet<_>>().len();
            if let (Some(&earliest), Some(&latest)) = (present.iter().min(), present.iter().max()) {
                p.temporal_range = Some(TemporalRange {
                    earliest,
                    latest,
                    granularity: *granularity,
                });
                let secs: Vec<f64> = present.iter().map(temporal::to_epoch_seconds).collect();
                let bins = stats::equal_width_histogram(&secs, HISTOGRAM_BINS)
                    .into_iter()
                    .map(|b| TimeBin {
                        start: temporal::from_epoch_seconds(b.lower).unwrap_or(earliest),
                        end: temporal::from_epoch_seconds(b.upper).unwrap_or(latest),
                        count: b.count,
                    })
                    .collect();
                p.histogram = Histogram::Temporal { bins };
            }
        }
    }
    p
}
