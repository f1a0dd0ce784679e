use chrono::NaiveDateTime;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::PrimitiveError;
use crate::data::{ColumnData, DataError, Dataset, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
    Temporal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
    Temporal(Vec<Option<NaiveDateTime>>),
}

impl FeatureData {
    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureData::Numeric(_) => FeatureKind::Numeric,
            FeatureData::Categorical(_) => FeatureKind::Categorical,
            FeatureData::Temporal(_) => FeatureKind::Temporal,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FeatureData::Numeric(v) => v.len(),
            FeatureData::Categorical(v) => v.len(),
            FeatureData::Temporal(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> FeatureData {
        fn pick<T: Clone>(v: &[Option<T>], rows: &[usize]) -> Vec<Option<T>> {
            rows.iter().map(|&r| v[r].clone()).collect()
        }
        match self {
            FeatureData::Numeric(v) => FeatureData::Numeric(pick(v, rows)),
            FeatureData::Categorical(v) => FeatureData::Categorical(pick(v, rows)),
            FeatureData::Temporal(v) => FeatureData::Temporal(pick(v, rows)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    pub name: String,
    pub data: FeatureData,
}

/// Name and kind of one feature column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureField {
    pub name: String,
    pub kind: FeatureKind,
}

/// The columns a primitive sees: numeric, categorical or temporal, possibly
/// with missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    columns: Vec<FeatureColumn>,
    rows: usize,
}

impl FeatureTable {
    /// All columns must have `rows` entries.
    pub fn new(columns: Vec<FeatureColumn>, rows: usize) -> Self {
        debug_assert!(columns.iter().all(|c| c.data.len() == rows));
        FeatureTable { columns, rows }
    }

    /// Builds a table from `features` of `dataset`, restricted to `rows`.
    pub fn from_dataset(dataset: &Dataset, features: &[String], rows: &[usize]) -> Result<Self, DataError> {
        let mut columns = Vec::with_capacity(features.len());
        for f in features {
            let col = dataset.require_column(f)?;
            let data = match col.data.select(rows) {
                ColumnData::Numeric(v) => FeatureData::Numeric(v),
                ColumnData::Categorical(v) => FeatureData::Categorical(v),
                ColumnData::Temporal { values, .. } => FeatureData::Temporal(values),
                ColumnData::Text(_) => {
                    return Err(DataError::InvalidValue {
                        column: f.clone(),
                        message: "text columns cannot be used as features".into(),
                    })
                }
            };
            columns.push(FeatureColumn { name: f.clone(), data });
        }
        Ok(FeatureTable {
            columns,
            rows: rows.len(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&FeatureColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn into_columns(self) -> Vec<FeatureColumn> {
        self.columns
    }

    pub fn schema(&self) -> Vec<FeatureField> {
        self.columns
            .iter()
            .map(|c| FeatureField {
                name: c.name.clone(),
                kind: c.data.kind(),
            })
            .collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureTable {
        FeatureTable {
            columns: self
                .columns
                .iter()
                .map(|c| FeatureColumn {
                    name: c.name.clone(),
                    data: c.data.select(rows),
                })
                .collect(),
            rows: rows.len(),
        }
    }

    /// Replaces the named column's data in place.
    pub fn with_column(mut self, name: &str, data: FeatureData) -> FeatureTable {
        debug_assert_eq!(data.len(), self.rows);
        if let Some(c) = self.columns.iter_mut().find(|c| c.name == name) {
            c.data = data;
        }
        self
    }

    /// Dense matrix for the numeric kernels. Every column must be numeric and
    /// complete.
    pub fn to_matrix(&self, primitive: &str) -> Result<Array2<f64>, PrimitiveError> {
        let mut m = Array2::<f64>::zeros((self.rows, self.columns.len()));
        for (j, c) in self.columns.iter().enumerate() {
            let FeatureData::Numeric(values) = &c.data else {
                return Err(PrimitiveError::NonNumericInput {
                    primitive: primitive.to_string(),
                    column: c.name.clone(),
                });
            };
            for (i, v) in values.iter().enumerate() {
                m[[i, j]] = v.ok_or_else(|| PrimitiveError::MissingValues {
                    primitive: primitive.to_string(),
                    column: c.name.clone(),
                })?;
            }
        }
        Ok(m)
    }
}

/// Target values or predictions: numbers for regression, labels for
/// classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Numeric(Vec<f64>),
    Labels(Vec<String>),
}

impl Target {
    pub fn len(&self) -> usize {
        match self {
            Target::Numeric(v) => v.len(),
            Target::Labels(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> Value {
        match self {
            Target::Numeric(v) => Value::Number(v[i]),
            Target::Labels(v) => Value::Text(v[i].clone()),
        }
    }

    pub fn select(&self, rows: &[usize]) -> Target {
        match self {
            Target::Numeric(v) => Target::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Target::Labels(v) => Target::Labels(rows.iter().map(|&r| v[r].clone()).collect()),
        }
    }

    /// Target column of `dataset` at `rows`; missing cells are an error.
    pub fn from_dataset(dataset: &Dataset, column: &str, rows: &[usize]) -> Result<Target, DataError> {
        let col = dataset.require_column(column)?;
        let missing = || DataError::InvalidValue {
            column: column.to_string(),
            message: "missing target value".into(),
        };
        match &col.data {
            ColumnData::Numeric(v) => rows
                .iter()
                .map(|&r| v[r].ok_or_else(missing))
                .collect::<Result<_, _>>()
                .map(Target::Numeric),
            ColumnData::Categorical(v) | ColumnData::Text(v) => rows
                .iter()
                .map(|&r| v[r].clone().ok_or_else(missing))
                .collect::<Result<_, _>>()
                .map(Target::Labels),
            ColumnData::Temporal { .. } => Err(DataError::InvalidValue {
                column: column.to_string(),
                message: "temporal columns cannot be targets".into(),
            }),
        }
    }
}

pub type Predictions = Target;
