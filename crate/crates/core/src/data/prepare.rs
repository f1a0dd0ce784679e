use serde::{Deserialize, Serialize};

use super::temporal;
use super::{Column, ColumnData, DataError, Dataset, Provenance, Value};

/// A single preparation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum PrepAction {
    ExcludeColumn { column: String },
    FillMissing { column: String, value: Value },
    /// Removes rows whose value lies outside `[low, high]`. Missing cells are kept.
    DropRowsOutside { column: String, low: f64, high: f64 },
}

impl PrepAction {
    pub fn column(&self) -> &str {
        match self {
            PrepAction::ExcludeColumn { column }
            | PrepAction::FillMissing { column, .. }
            | PrepAction::DropRowsOutside { column, .. } => column,
        }
    }
}

/// Applies `actions` in order and returns a new dataset.
pub fn prepare(dataset: &Dataset, actions: &[PrepAction]) -> Result<Dataset, DataError> {
    let mut current = dataset.clone();
    for action in actions {
        current = apply(current, action)?;
    }
    Ok(current.with_provenance(Provenance::Prepared {
        parent: dataset.name().to_string(),
        actions: actions.to_vec(),
    }))
}

fn apply(dataset: Dataset, action: &PrepAction) -> Result<Dataset, DataError> {
    let idx = dataset
        .columns()
        .iter()
        .position(|c| c.name == action.column())
        .ok_or_else(|| DataError::ColumnNotFound(action.column().to_string()))?;
    let name = dataset.name().to_string();
    let provenance = dataset.provenance().clone();
    match action {
        PrepAction::ExcludeColumn { .. } => {
            let mut columns = dataset.into_columns();
            columns.remove(idx);
            Dataset::new(name, columns, provenance)
        }
        PrepAction::FillMissing { column, value } => {
            let mut columns = dataset.into_columns();
            let filled = fill(&columns[idx].data, value).map_err(|message| DataError::InvalidValue {
                column: column.clone(),
                message,
            })?;
            columns[idx] = Column::new(column.clone(), filled);
            Dataset::new(name, columns, provenance)
        }
        PrepAction::DropRowsOutside { column, low, high } => {
            let values = dataset.columns()[idx]
                .data
                .as_numeric()
                .ok_or_else(|| DataError::NonNumericColumn(column.clone()))?;
            let keep: Vec<usize> = values
                .iter()
                .enumerate()
                .filter(|(_, v)| v.is_none_or(|x| x >= *low && x <= *high))
                .map(|(i, _)| i)
                .collect();
            Ok(dataset.select_rows(&keep))
        }
    }
}

fn fill(data: &ColumnData, value: &Value) -> Result<ColumnData, String> {
    fn fill_vec<T: Clone>(v: &[Option<T>], with: T) -> Vec<Option<T>> {
        v.iter().map(|x| Some(x.clone().unwrap_or_else(|| with.clone()))).collect()
    }
    Ok(match (data, value) {
        (ColumnData::Numeric(v), Value::Number(x)) => ColumnData::Numeric(fill_vec(v, *x)),
        (ColumnData::Numeric(v), Value::Text(s)) => {
            let x = s
                .trim()
                .parse::<f64>()
                .map_err(|_| format!("{s:?} is not a number"))?;
            ColumnData::Numeric(fill_vec(v, x))
        }
        (ColumnData::Categorical(v), value) => ColumnData::Categorical(fill_vec(v, render(value))),
        (ColumnData::Text(v), value) => ColumnData::Text(fill_vec(v, render(value))),
        (ColumnData::Temporal { values, .. }, value) => {
            let s = render(value);
            let ts = temporal::parse_timestamp(&s).ok_or_else(|| format!("{s:?} is not a timestamp"))?;
            let values = fill_vec(values, ts);
            let granularity = temporal::detect_granularity(values.iter().flatten());
            ColumnData::Temporal {
                values,
                granularity,
            }
        }
    })
}

fn render(value: &Value) -> String {
    match value {
        Value::Number(x) => x.to_string(),
        Value::Text(s) => s.clone(),
    }
}
