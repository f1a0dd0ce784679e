//! Tabular datasets: typed columns with explicit missing cells, CSV
//! ingestion, profiling and simple preparation steps.

mod io;
mod prepare;
mod profile;
pub mod temporal;

use std::collections::HashSet;
use std::fmt;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use io::{ingest_csv, ingest_csv_with, read_dataset, write_csv, ColumnSchema, InferenceOptions, Sidecar};
pub use prepare::{prepare, PrepAction};
pub use profile::{profile, profile_column, ColumnProfile, Histogram, NumericStats, TemporalRange, TimeBin};
pub use temporal::Granularity;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("malformed CSV at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("column not found: {0}")]
    ColumnNotFound(String),
    #[error("duplicate column name: {0}")]
    DuplicateColumn(String),
    #[error("column {column} has {found} values, expected {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("column {0} is not numeric")]
    NonNumericColumn(String),
    #[error("invalid value for column {column}: {message}")]
    InvalidValue { column: String, message: String },
    #[error("sidecar does not match data: {0}")]
    SchemaMismatch(String),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dtype {
    Numeric,
    Categorical,
    Temporal,
    Text,
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dtype::Numeric => "numeric",
            Dtype::Categorical => "categorical",
            Dtype::Temporal => "temporal",
            Dtype::Text => "text",
        };
        f.write_str(s)
    }
}

/// A single present cell value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Text(String),
}

/// Typed storage for a column. Missing cells are `None`.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
    Temporal {
        values: Vec<Option<NaiveDateTime>>,
        granularity: Granularity,
    },
    Text(Vec<Option<String>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) | ColumnData::Text(v) => v.len(),
            ColumnData::Temporal { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            ColumnData::Numeric(_) => Dtype::Numeric,
            ColumnData::Categorical(_) => Dtype::Categorical,
            ColumnData::Temporal { .. } => Dtype::Temporal,
            ColumnData::Text(_) => Dtype::Text,
        }
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            ColumnData::Numeric(v) => v[row].is_none(),
            ColumnData::Categorical(v) | ColumnData::Text(v) => v[row].is_none(),
            ColumnData::Temporal { values, .. } => values[row].is_none(),
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_missing(i)).count()
    }

    /// Rows `rows` in the given order.
    pub fn select(&self, rows: &[usize]) -> ColumnData {
        fn pick<T: Clone>(v: &[Option<T>], rows: &[usize]) -> Vec<Option<T>> {
            rows.iter().map(|&r| v[r].clone()).collect()
        }
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(pick(v, rows)),
            ColumnData::Categorical(v) => ColumnData::Categorical(pick(v, rows)),
            ColumnData::Text(v) => ColumnData::Text(pick(v, rows)),
            ColumnData::Temporal {
                values,
                granularity,
            } => ColumnData::Temporal {
                values: pick(values, rows),
                granularity: *granularity,
            },
        }
    }

    /// Cell rendered as it would appear in CSV; empty for missing.
    pub fn render(&self, row: usize) -> String {
        match self {
            ColumnData::Numeric(v) => v[row].map(|x| x.to_string()).unwrap_or_default(),
            ColumnData::Categorical(v) | ColumnData::Text(v) => v[row].clone().unwrap_or_default(),
            ColumnData::Temporal {
                values,
                granularity,
            } => values[row]
                .map(|t| temporal::format_timestamp(&t, *granularity))
                .unwrap_or_default(),
        }
    }

    pub fn value(&self, row: usize) -> Option<Value> {
        match self {
            ColumnData::Numeric(v) => v[row].map(Value::Number),
            ColumnData::Categorical(v) | ColumnData::Text(v) => v[row].clone().map(Value::Text),
            ColumnData::Temporal { .. } => {
                if self.is_missing(row) {
                    None
                } else {
                    Some(Value::Text(self.render(row)))
                }
            }
        }
    }

    pub fn as_numeric(&self) -> Option<&[Option<f64>]> {
        match self {
            ColumnData::Numeric(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn new(name: impl Into<String>, data: ColumnData) -> Self {
        Column {
            name: name.into(),
            data,
        }
    }

    pub fn numeric(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Column::new(name, ColumnData::Numeric(values))
    }

    pub fn categorical(name: impl Into<String>, values: Vec<Option<String>>) -> Self {
        Column::new(name, ColumnData::Categorical(values))
    }

    /// Temporal column with granularity detected from the values.
    pub fn temporal(name: impl Into<String>, values: Vec<Option<NaiveDateTime>>) -> Self {
        let granularity = temporal::detect_granularity(values.iter().flatten());
        Column::new(
            name,
            ColumnData::Temporal {
                values,
                granularity,
            },
        )
    }

    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn granularity(&self) -> Option<Granularity> {
        match &self.data {
            ColumnData::Temporal { granularity, .. } => Some(*granularity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Uploaded,
    Corpus,
    Prepared {
        parent: String,
        actions: Vec<PrepAction>,
    },
    Augmented {
        parents: Vec<String>,
        operation: String,
    },
}

/// Named, immutable table of typed columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    columns: Vec<Column>,
    row_count: usize,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        columns: Vec<Column>,
        provenance: Provenance,
    ) -> Result<Self, DataError> {
        let row_count = columns.first().map(Column::len).unwrap_or(0);
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(DataError::DuplicateColumn(c.name.clone()));
            }
            if c.len() != row_count {
                return Err(DataError::LengthMismatch {
                    column: c.name.clone(),
                    expected: row_count,
                    found: c.len(),
                });
            }
        }
        Ok(Dataset {
            name: name.into(),
            columns,
            row_count,
            provenance,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn require_column(&self, name: &str) -> Result<&Column, DataError> {
        self.column(name)
            .ok_or_else(|| DataError::ColumnNotFound(name.to_string()))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn into_columns(self) -> Vec<Column> {
        self.columns
    }

    /// New dataset holding `rows` in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| Column::new(c.name.clone(), c.data.select(rows)))
                .collect(),
            row_count: rows.len(),
            provenance: self.provenance.clone(),
        }
    }

    /// First `n` rows rendered as strings.
    pub fn preview(&self, n: usize) -> Vec<Vec<String>> {
        (0..self.row_count.min(n))
            .map(|r| self.columns.iter().map(|c| c.data.render(r)).collect())
            .collect()
    }

    /// Content hash over column names, dtypes and cell values. The dataset
    /// name and provenance do not contribute.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.row_count as u64).to_le_bytes());
        for c in &self.columns {
            h.update(c.name.as_bytes());
            h.update([0u8, c.dtype() as u8]);
            for r in 0..self.row_count {
                match &c.data {
                    ColumnData::Numeric(v) => match v[r] {
                        Some(x) => h.update(x.to_bits().to_le_bytes()),
                        None => h.update([0xffu8]),
                    },
                    _ => {
                        if c.data.is_missing(r) {
                            h.update([0xffu8]);
                        } else {
                            h.update(c.data.render(r).as_bytes());
                            h.update([0u8]);
                        }
                    }
                }
            }
        }
        hex_prefix(&h.finalize(), 16)
    }
}

pub(crate) fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s.truncate(chars);
    s
}
