use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::temporal::{self, Granularity};
use super::{Column, ColumnData, DataError, Dataset, Dtype, Provenance};

/// Thresholds used when inferring column types from raw strings.
#[derive(Debug, Clone, Copy)]
pub struct InferenceOptions {
    /// Fraction of present values that must parse for numeric/temporal.
    pub type_threshold: f64,
    /// Categorical if distinct values `<= max(categorical_min, categorical_fraction * rows)`.
    pub categorical_min: usize,
    pub categorical_fraction: f64,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            type_threshold: 0.95,
            categorical_min: 20,
            categorical_fraction: 0.05,
        }
    }
}

/// Name, type and (for temporal columns) granularity of one column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub dtype: Dtype,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub granularity: Option<Granularity>,
}

impl ColumnSchema {
    pub fn of(column: &Column) -> Self {
        ColumnSchema {
            name: column.name.clone(),
            dtype: column.dtype(),
            granularity: column.granularity(),
        }
    }
}

/// JSON document persisted next to a dataset's CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub name: String,
    pub dtypes: BTreeMap<String, Dtype>,
    #[serde(default)]
    pub granularities: BTreeMap<String, Granularity>,
    pub provenance: Provenance,
}

impl Sidecar {
    pub fn of(dataset: &Dataset) -> Self {
        Sidecar {
            name: dataset.name().to_string(),
            dtypes: dataset
                .columns()
                .iter()
                .map(|c| (c.name.clone(), c.dtype()))
                .collect(),
            granularities: dataset
                .columns()
                .iter()
                .filter_map(|c| c.granularity().map(|g| (c.name.clone(), g)))
                .collect(),
            provenance: dataset.provenance().clone(),
        }
    }
}

struct RawTable {
    header: Vec<String>,
    columns: Vec<Vec<Option<String>>>,
    rows: usize,
}

fn read_raw<R: Read>(source: R) -> Result<RawTable, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| DataError::Parse {
            row: 0,
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(DataError::EmptyDataset);
    }
    let mut columns: Vec<Vec<Option<String>>> = vec![Vec::new(); header.len()];
    let mut rows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DataError::Parse {
            row: i + 1,
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(DataError::Parse {
                row: i + 1,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            let t = field.trim();
            col.push((!t.is_empty()).then(|| t.to_string()));
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(DataError::EmptyDataset);
    }
    Ok(RawTable {
        header,
        columns,
        rows,
    })
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn infer_column(name: String, raw: Vec<Option<String>>, rows: usize, opts: &InferenceOptions) -> Column {
    let present: Vec<&str> = raw.iter().flatten().map(String::as_str).collect();
    if present.is_empty() {
        return Column::numeric(name, vec![None; rows]);
    }
    let need = opts.type_threshold * present.len() as f64;
    let numeric_ok = present.iter().filter(|s| parse_number(s).is_some()).count();
    if numeric_ok as f64 >= need {
        let values = raw.iter().map(|v| v.as_deref().and_then(parse_number)).collect();
        return Column::numeric(name, values);
    }
    let temporal_ok = present
        .iter()
        .filter(|s| temporal::parse_timestamp(s).is_some())
        .count();
    if temporal_ok as f64 >= need {
        let values = raw
            .iter()
            .map(|v| v.as_deref().and_then(temporal::parse_timestamp))
            .collect();
        return Column::temporal(name, values);
    }
    let distinct: HashSet<&str> = present.iter().copied().collect();
    let cutoff = (opts.categorical_min as f64).max(opts.categorical_fraction * rows as f64);
    if distinct.len() as f64 <= cutoff {
        Column::categorical(name, raw)
    } else {
        Column::new(name, ColumnData::Text(raw))
    }
}

/// Reads a headed CSV document and infers a type for every column.
pub fn ingest_csv<R: Read>(source: R, name: &str) -> Result<Dataset, DataError> {
    ingest_csv_with(source, name, &InferenceOptions::default())
}

pub fn ingest_csv_with<R: Read>(
    source: R,
    name: &str,
    opts: &InferenceOptions,
) -> Result<Dataset, DataError> {
    let raw = read_raw(source)?;
    let rows = raw.rows;
    let columns = raw
        .header
        .into_iter()
        .zip(raw.columns)
        .map(|(h, values)| infer_column(h, values, rows, opts))
        .collect();
    Dataset::new(name, columns, Provenance::Uploaded)
}

/// Reads a CSV whose column types are fixed by `sidecar` instead of being
/// inferred. Any present cell that does not parse as its declared type is an
/// error.
pub fn read_dataset<R: Read>(source: R, sidecar: &Sidecar) -> Result<Dataset, DataError> {
    let raw = read_raw(source)?;
    let declared: HashSet<&str> = sidecar.dtypes.keys().map(String::as_str).collect();
    let header: HashSet<&str> = raw.header.iter().map(String::as_str).collect();
    if declared != header {
        return Err(DataError::SchemaMismatch(format!(
            "sidecar columns {:?} differ from CSV header {:?}",
            sidecar.dtypes.keys().collect::<Vec<_>>(),
            raw.header
        )));
    }
    let mut columns = Vec::with_capacity(raw.header.len());
    for (name, values) in raw.header.into_iter().zip(raw.columns) {
        let dtype = sidecar.dtypes[&name];
        let bad = |v: &str| DataError::InvalidValue {
            column: name.clone(),
            message: format!("{v:?} is not {dtype}"),
        };
        let data = match dtype {
            Dtype::Numeric => ColumnData::Numeric(
                values
                    .iter()
                    .map(|v| v.as_deref().map(|s| parse_number(s).ok_or_else(|| bad(s))).transpose())
                    .collect::<Result<_, _>>()?,
            ),
            Dtype::Temporal => {
                let parsed: Vec<_> = values
                    .iter()
                    .map(|v| {
                        v.as_deref()
                            .map(|s| temporal::parse_timestamp(s).ok_or_else(|| bad(s)))
                            .transpose()
                    })
                    .collect::<Result<_, _>>()?;
                let granularity = sidecar
                    .granularities
                    .get(&name)
                    .copied()
                    .unwrap_or_else(|| temporal::detect_granularity(parsed.iter().flatten()));
                ColumnData::Temporal {
                    values: parsed,
                    granularity,
                }
            }
            Dtype::Categorical => ColumnData::Categorical(values),
            Dtype::Text => ColumnData::Text(values),
        };
        columns.push(Column::new(name, data));
    }
    Dataset::new(sidecar.name.clone(), columns, sidecar.provenance.clone())
}

/// Writes the dataset as headed CSV; missing cells are empty fields.
pub fn write_csv<W: Write>(dataset: &Dataset, sink: W) -> Result<(), DataError> {
    let io = |e: csv::Error| DataError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(dataset.column_names()).map_err(io)?;
    for r in 0..dataset.row_count() {
        w.write_record(dataset.columns().iter().map(|c| c.data.render(r)))
            .map_err(io)?;
    }
    w.flush().map_err(|e| DataError::Io(e.to_string()))
}
