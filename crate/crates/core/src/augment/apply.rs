//! Join and union execution.

use std::collections::BTreeMap;

use chrono::NaiveDateTime;

use super::{Aggregation, AugmentCandidate, AugmentError, Corpus, JoinKind, JoinPlan, KeyPair, Operation};
use crate::data::temporal::truncate;
use crate::data::{Column, ColumnData, Dataset, Granularity, Provenance};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum KeyCell {
    Number(u64),
    Text(String),
    Time(NaiveDateTime),
}

fn key_cell(data: &ColumnData, row: usize, granularity: Option<Granularity>) -> Option<KeyCell> {
    match data {
        ColumnData::Numeric(v) => v[row].map(|x| KeyCell::Number((x + 0.0).to_bits())),
        ColumnData::Categorical(v) | ColumnData::Text(v) => v[row].clone().map(KeyCell::Text),
        ColumnData::Temporal { values, .. } => values[row].map(|t| match granularity {
            Some(g) => KeyCell::Time(truncate(t, g)),
            None => KeyCell::Time(t),
        }),
    }
}

type KeyColumns<'a> = Vec<(&'a ColumnData, Option<Granularity>)>;

fn key_of(cols: &KeyColumns, row: usize) -> Option<Vec<KeyCell>> {
    cols.iter().map(|(d, g)| key_cell(d, row, *g)).collect()
}

fn key_columns<'a>(
    ds: &'a Dataset,
    plan: &JoinPlan,
    side: impl Fn(&KeyPair) -> &str,
) -> Result<KeyColumns<'a>, AugmentError> {
    let granularity = match plan.kind {
        JoinKind::Temporal { granularity, .. } => Some(granularity),
        JoinKind::Exact => None,
    };
    plan.keys
        .iter()
        .map(|k| {
            let c = ds.require_column(side(k))?;
            let g = matches!(c.data, ColumnData::Temporal { .. }).then_some(granularity).flatten();
            Ok((&c.data, g))
        })
        .collect()
}

fn mean(data: &ColumnData, rows: &[usize]) -> Option<f64> {
    let v = data.as_numeric()?;
    let present: Vec<f64> = rows.iter().filter_map(|&r| v[r]).collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

fn mode(values: &[Option<String>], rows: &[usize]) -> Option<String> {
    let mut counts: BTreeMap<&String, usize> = BTreeMap::new();
    for v in rows.iter().filter_map(|&r| values[r].as_ref()) {
        *counts.entry(v).or_default() += 1;
    }
    // max_by_key keeps the last maximum; iterate in reverse so the
    // lexicographically smallest label wins ties
    counts.into_iter().rev().max_by_key(|(_, n)| *n).map(|(v, _)| v.clone())
}

fn aggregate(name: &str, data: &ColumnData, groups: &[Option<&Vec<usize>>], agg: Aggregation) -> Column {
    match (data, agg) {
        (ColumnData::Numeric(_), _) => {
            Column::numeric(name, groups.iter().map(|g| g.and_then(|rows| mean(data, rows))).collect())
        }
        (ColumnData::Temporal { values, .. }, _) => Column::temporal(
            name,
            groups
                .iter()
                .map(|g| g.and_then(|rows| rows.iter().filter_map(|&r| values[r]).min()))
                .collect(),
        ),
        (ColumnData::Categorical(v), _) => {
            Column::categorical(name, groups.iter().map(|g| g.and_then(|rows| mode(v, rows))).collect())
        }
        (ColumnData::Text(v), _) => Column::new(
            name,
            ColumnData::Text(groups.iter().map(|g| g.and_then(|rows| mode(v, rows))).collect()),
        ),
    }
}

fn join(query: &Dataset, candidate: &Dataset, plan: &JoinPlan) -> Result<Vec<Column>, AugmentError> {
    let qk = key_columns(query, plan, |k| &k.query)?;
    let ck = key_columns(candidate, plan, |k| &k.candidate)?;
    let mut groups: BTreeMap<Vec<KeyCell>, Vec<usize>> = BTreeMap::new();
    for r in 0..candidate.row_count() {
        if let Some(k) = key_of(&ck, r) {
            groups.entry(k).or_default().push(r);
        }
    }
    let matched: Vec<Option<&Vec<usize>>> = (0..query.row_count())
        .map(|r| key_of(&qk, r).and_then(|k| groups.get(&k)))
        .collect();
    let mut columns = query.columns().to_vec();
    for c in &plan.carried {
        let data = &candidate.require_column(&c.column)?.data;
        columns.push(aggregate(&c.output, data, &matched, c.aggregation));
    }
    Ok(columns)
}

fn concat(name: &str, a: &ColumnData, b: &ColumnData) -> Result<Column, AugmentError> {
    fn cat<T: Clone>(a: &[T], b: &[T]) -> Vec<T> {
        a.iter().chain(b).cloned().collect()
    }
    Ok(match (a, b) {
        (ColumnData::Numeric(x), ColumnData::Numeric(y)) => Column::numeric(name, cat(x, y)),
        (ColumnData::Categorical(x), ColumnData::Categorical(y)) => Column::categorical(name, cat(x, y)),
        (ColumnData::Text(x), ColumnData::Text(y)) => Column::new(name, ColumnData::Text(cat(x, y))),
        (ColumnData::Temporal { values: x, .. }, ColumnData::Temporal { values: y, .. }) => {
            Column::temporal(name, cat(x, y))
        }
        _ => return Err(AugmentError::InvalidPlan(format!("column {name} changes type in union"))),
    })
}

fn union(query: &Dataset, candidate: &Dataset, mapping: &[KeyPair]) -> Result<Vec<Column>, AugmentError> {
    if mapping.len() != query.columns().len() {
        return Err(AugmentError::InvalidPlan("union must map every query column".into()));
    }
    mapping
        .iter()
        .map(|m| {
            let q = query.require_column(&m.query)?;
            let c = candidate.require_column(&m.candidate)?;
            concat(&q.name, &q.data, &c.data)
        })
        .collect()
}

/// Executes `candidate` against `query` using the corpus dataset it was
/// found for. Joins keep every query row in order; unions append the corpus
/// rows under the query schema.
pub fn apply_augmentation(
    query: &Dataset,
    corpus_dataset: &Dataset,
    candidate: &AugmentCandidate,
) -> Result<Dataset, AugmentError> {
    for (ds, expected) in [
        (query, &candidate.query_fingerprint),
        (corpus_dataset, &candidate.candidate_fingerprint),
    ] {
        if ds.fingerprint() != *expected {
            return Err(AugmentError::StaleCandidate {
                candidate: candidate.candidate_id.clone(),
                dataset: ds.name().to_string(),
            });
        }
    }
    let columns = match &candidate.operation {
        Operation::Join { plan } => join(query, corpus_dataset, plan)?,
        Operation::Union { mapping } => union(query, corpus_dataset, mapping)?,
    };
    Ok(Dataset::new(
        format!("{}+{}", query.name(), candidate.entry.name),
        columns,
        Provenance::Augmented {
            parents: vec![query.name().to_string(), candidate.entry.name.clone()],
            operation: candidate.operation.label().to_string(),
        },
    )?)
}

impl Corpus {
    /// [`apply_augmentation`] with the corpus dataset looked up by name.
    pub fn apply(&self, query: &Dataset, candidate: &AugmentCandidate) -> Result<Dataset, AugmentError> {
        let entry = self
            .entry(&candidate.entry.name)
            .ok_or_else(|| AugmentError::EntryNotFound(candidate.entry.name.clone()))?;
        apply_augmentation(query, &entry.dataset, candidate)
    }
}
