//! Relevance scoring and join/union compatibility detection.

use std::collections::HashSet;

use super::{
    Aggregation, AugmentCandidate, CarriedColumn, Corpus, CorpusMeta, JoinKind, JoinPlan, KeyPair, Operation,
    Preview, COLLISION_SUFFIX, PREVIEW_ROWS,
};
use crate::data::{profile, ColumnSchema, Dataset, Dtype};

/// Lowercase alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Term-frequency match of the distinct query terms, weighting the entry
/// name 3, keywords 2, description 1 and column names 2.
pub fn relevance(meta: &CorpusMeta, keywords: &str) -> f64 {
    let mut terms = tokenize(keywords);
    terms.sort();
    terms.dedup();
    let name = tokenize(&meta.name);
    let keys: Vec<String> = meta.keywords.iter().flat_map(|k| tokenize(k)).collect();
    let description = tokenize(&meta.description);
    let columns: Vec<String> = meta.columns.iter().flat_map(|c| tokenize(&c.name)).collect();
    let tf = |field: &[String], t: &String| field.iter().filter(|x| *x == t).count() as f64;
    terms
        .iter()
        .map(|t| 3.0 * tf(&name, t) + 2.0 * tf(&keys, t) + tf(&description, t) + 2.0 * tf(&columns, t))
        .sum()
}

fn aggregation_for(dtype: Dtype) -> Aggregation {
    match dtype {
        Dtype::Numeric => Aggregation::Mean,
        Dtype::Temporal => Aggregation::Earliest,
        Dtype::Categorical | Dtype::Text => Aggregation::Mode,
    }
}

/// Exact keys pair same-named non-temporal columns of equal dtype. At most
/// one temporal pair is used: same-named if possible, otherwise the first
/// temporal column of each side. Requires a key and a column to carry.
pub(crate) fn join_plan(query: &[ColumnSchema], candidate: &[ColumnSchema]) -> Option<JoinPlan> {
    let mut keys: Vec<KeyPair> = query
        .iter()
        .filter(|q| q.dtype != Dtype::Temporal)
        .filter(|q| candidate.iter().any(|c| c.name == q.name && c.dtype == q.dtype))
        .map(|q| KeyPair {
            query: q.name.clone(),
            candidate: q.name.clone(),
        })
        .collect();
    let temporal = |cols: &[ColumnSchema]| -> Vec<ColumnSchema> {
        cols.iter().filter(|c| c.dtype == Dtype::Temporal).cloned().collect()
    };
    let (qt, ct) = (temporal(query), temporal(candidate));
    let pair = qt
        .iter()
        .find_map(|q| ct.iter().find(|c| c.name == q.name).map(|c| (q, c)))
        .or_else(|| qt.first().zip(ct.first()));
    let kind = match pair {
        Some((q, c)) => {
            keys.push(KeyPair {
                query: q.name.clone(),
                candidate: c.name.clone(),
            });
            let g = |s: &ColumnSchema| s.granularity.unwrap_or(crate::data::Granularity::Second);
            JoinKind::Temporal {
                query_column: q.name.clone(),
                candidate_column: c.name.clone(),
                granularity: g(q).coarser(g(c)),
            }
        }
        None => JoinKind::Exact,
    };
    if keys.is_empty() {
        return None;
    }
    let key_names: HashSet<&str> = keys.iter().map(|k| k.candidate.as_str()).collect();
    let mut taken: HashSet<String> = query.iter().map(|c| c.name.clone()).collect();
    let carried: Vec<CarriedColumn> = candidate
        .iter()
        .filter(|c| !key_names.contains(c.name.as_str()))
        .map(|c| {
            let mut output = c.name.clone();
            while taken.contains(&output) {
                output.push_str(COLLISION_SUFFIX);
            }
            taken.insert(output.clone());
            CarriedColumn {
                column: c.name.clone(),
                output,
                aggregation: aggregation_for(c.dtype),
            }
        })
        .collect();
    if carried.is_empty() {
        return None;
    }
    Some(JoinPlan { keys, kind, carried })
}

/// Maps every query column to the same-named corpus column of equal dtype.
pub(crate) fn union_mapping(query: &[ColumnSchema], candidate: &[ColumnSchema]) -> Option<Vec<KeyPair>> {
    query
        .iter()
        .map(|q| {
            candidate
                .iter()
                .find(|c| c.name == q.name && c.dtype == q.dtype)
                .map(|c| KeyPair {
                    query: q.name.clone(),
                    candidate: c.name.clone(),
                })
        })
        .collect()
}

/// Compatible corpus entries ranked by relevance, then key overlap, then
/// entry name. With non-empty keywords, entries scoring zero are dropped.
pub fn search_augmentations(corpus: &Corpus, query: &Dataset, keywords: &str) -> Vec<AugmentCandidate> {
    let query_schema: Vec<ColumnSchema> = query.columns().iter().map(ColumnSchema::of).collect();
    let query_fingerprint = query.fingerprint();
    let filter = !tokenize(keywords).is_empty();
    let mut out = Vec::new();
    for entry in corpus.entries() {
        let score = relevance(&entry.meta, keywords);
        if filter && score == 0.0 {
            continue;
        }
        let schema: &Vec<ColumnSchema> = &entry.dataset.columns().iter().map(ColumnSchema::of).collect();
        let mut operations = Vec::new();
        if let Some(plan) = join_plan(&query_schema, schema) {
            operations.push(Operation::Join { plan });
        }
        if let Some(mapping) = union_mapping(&query_schema, schema) {
            operations.push(Operation::Union { mapping });
        }
        if operations.is_empty() {
            continue;
        }
        let ds = &entry.dataset;
        let preview = Preview {
            columns: schema.clone(),
            rows: ds.preview(PREVIEW_ROWS),
            profiles: profile(ds),
        };
        let candidate_fingerprint = ds.fingerprint();
        for operation in operations {
            out.push(AugmentCandidate {
                candidate_id: format!("{}:{}", entry.meta.name, operation.label()),
                entry: entry.meta.clone(),
                operation,
                relevance: score,
                preview: preview.clone(),
                query_fingerprint: query_fingerprint.clone(),
                candidate_fingerprint: candidate_fingerprint.clone(),
            });
        }
    }
    out.sort_by(|a, b| {
        b.relevance
            .total_cmp(&a.relevance)
            .then(b.operation.key_overlap().cmp(&a.operation.key_overlap()))
            .then(a.entry.name.cmp(&b.entry.name))
    });
    out
}
