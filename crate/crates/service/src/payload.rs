//! Request and response bodies of the HTTP API.
//!
//! Every type here serializes to the JSON sent over the wire. Engine types
//! (profiles, score reports, explanation artifacts) are embedded unchanged.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use curate::augment::AugmentCandidate;
use curate::data::{ColumnProfile, ColumnSchema, PrepAction, Provenance};
use curate::evaluation::ScoreReport;
use curate::explain::{ConfusionMatrix, ConfusionScatter, PdpCurve, RuleSet};
use curate::pipeline::{Pipeline, StepDiff};
use curate::primitives::PrimitiveSpec;
use curate::problem::{Budget, Metric, ProblemSpec};
use curate::search::{RunState, Solution, SolutionStatus};

/// `GET /sessions/{s}` and `POST /sessions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub updated_at: u64,
    pub datasets: Vec<String>,
    pub problems: Vec<String>,
    pub runs: Vec<String>,
}

/// A dataset with its schema and column profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetView {
    pub name: String,
    pub row_count: usize,
    pub fingerprint: String,
    pub provenance: Provenance,
    pub columns: Vec<ColumnSchema>,
    pub profiles: Vec<ColumnProfile>,
    /// First rows rendered as strings, missing cells empty.
    pub preview: Vec<Vec<String>>,
}

/// Body of `POST /sessions/{s}/datasets/{d}/prepare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareRequest {
    pub actions: Vec<PrepAction>,
    /// Name of the prepared dataset; defaults to `{d}-prepared`.
    #[serde(default)]
    pub name: Option<String>,
}

/// Body of `POST /sessions/{s}/problems`. `spec` is the problem JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemRequest {
    pub dataset: String,
    pub spec: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemView {
    pub problem_id: String,
    pub dataset: String,
    pub spec: ProblemSpec,
    pub usable_rows: usize,
    pub excluded_rows: usize,
}

/// Optional body of `POST /sessions/{s}/problems/{p}/search`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchRequest {
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunView {
    pub run_id: String,
    pub problem_id: String,
    pub dataset: String,
    pub seed: u64,
    pub budget: Budget,
    pub state: RunState,
    pub solutions: usize,
    pub scored: usize,
}

/// `GET .../runs/{r}/events?cursor=n`: solutions with `seq > n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventsPage {
    pub run_id: String,
    pub cursor: u64,
    /// Cursor for the next poll: the last delivered `seq`, or `cursor` when empty.
    pub next_cursor: u64,
    pub state: RunState,
    pub solutions: Vec<Solution>,
}

/// One row of the solution table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRow {
    /// 1-based position in the ranking; `None` for failed solutions.
    pub rank: Option<usize>,
    pub solution_id: String,
    pub seq: u64,
    pub pipeline_id: String,
    pub description: String,
    pub steps: Vec<PrimitiveSpec>,
    pub status: SolutionStatus,
    pub scores: BTreeMap<Metric, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionTable {
    pub run_id: String,
    pub metric: Metric,
    pub state: RunState,
    pub rows: Vec<SolutionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparedSolution {
    pub solution_id: String,
    pub pipeline: Pipeline,
    pub report: Option<ScoreReport>,
}

/// `GET /sessions/{s}/solutions/compare?a=&b=`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub diff: StepDiff,
    pub a: ComparedSolution,
    pub b: ComparedSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentResults {
    pub dataset: String,
    pub keywords: String,
    pub candidates: Vec<AugmentCandidate>,
}

/// Body of `POST .../augment/apply`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplyRequest {
    pub candidate: AugmentCandidate,
    /// Name of the result; defaults to `{d}+{entry}`.
    #[serde(default)]
    pub name: Option<String>,
}

/// Explanation artifact tagged with its kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "explanation", rename_all = "snake_case")]
pub enum Explanation {
    ConfusionMatrix(ConfusionMatrix),
    Rules(RuleSet),
    Pdp(PdpCurve),
    Scatter(ConfusionScatter),
}
