//! Dataset augmentation over a local corpus: keyword search, join/union
//! compatibility detection and execution.

mod apply;
mod corpus;
mod plan;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ColumnProfile, ColumnSchema, DataError};

pub use apply::apply_augmentation;
pub use corpus::{index_corpus, save_corpus_entry, Corpus, CorpusEntry, CorpusMeta};
pub use plan::{relevance, search_augmentations, tokenize};

/// Number of corpus rows shown in a candidate preview.
pub const PREVIEW_ROWS: usize = 5;
/// Appended to a carried column whose name is already taken.
pub const COLLISION_SUFFIX: &str = "_aug";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AugmentError {
    #[error("candidate {candidate} is stale: {dataset} changed since the search")]
    StaleCandidate { candidate: String, dataset: String },
    #[error("corpus has no entry named {0:?}")]
    EntryNotFound(String),
    #[error("invalid augmentation plan: {0}")]
    InvalidPlan(String),
    #[error("corpus i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Mean,
    /// Most frequent value; ties go to the lexicographically smallest.
    Mode,
    Earliest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPair {
    pub query: String,
    pub candidate: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JoinKind {
    Exact,
    /// Both sides' time keys are truncated to `granularity` before matching.
    Temporal {
        query_column: String,
        candidate_column: String,
        granularity: crate::data::Granularity,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarriedColumn {
    pub column: String,
    /// Name in the augmented dataset.
    pub output: String,
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinPlan {
    /// Includes the temporal pair, if any.
    pub keys: Vec<KeyPair>,
    pub kind: JoinKind,
    pub carried: Vec<CarriedColumn>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Operation {
    Join { plan: JoinPlan },
    /// Query column to corpus column, in query column order.
    Union { mapping: Vec<KeyPair> },
}

impl Operation {
    pub fn label(&self) -> &'static str {
        match self {
            Operation::Join {
                plan: JoinPlan {
                    kind: JoinKind::Temporal { .. },
                    ..
                },
            } => "temporal_join",
            Operation::Join { .. } => "join",
            Operation::Union { .. } => "union",
        }
    }

    /// Number of matched column pairs.
    pub fn key_overlap(&self) -> usize {
        match self {
            Operation::Join { plan } => plan.keys.len(),
            Operation::Union { mapping } => mapping.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preview {
    pub columns: Vec<ColumnSchema>,
    pub rows: Vec<Vec<String>>,
    pub profiles: Vec<ColumnProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentCandidate {
    pub candidate_id: String,
    pub entry: CorpusMeta,
    pub operation: Operation,
    pub relevance: f64,
    pub preview: Preview,
    pub query_fingerprint: String,
    pub candidate_fingerprint: String,
}
