//! Budgeted pipeline search.
//!
//! Every template is first tried with default hyperparameters. If the rest
//! of the grid fits in the remaining budget it is enumerated in full;
//! otherwise each round samples one unseen grid point from each template in
//! the better-scoring half. Candidates within a round are evaluated on a
//! worker pool and emitted in candidate order, so a run is reproducible from
//! its seed.

mod candidates;
mod summary;

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::evaluation::{evaluate_with, EvalError, ScoreReport};
use crate::pipeline::Pipeline;
use crate::primitives::FeatureTable;
use crate::problem::{Budget, Metric, ProblemSpec, ValidatedSpec};

pub use candidates::{templates, Template};
pub use summary::{parallel_coordinates, rank_solutions, summarize_scores, ParallelCoordinates, ParallelRow, ScoreHistogram};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("problem is bound to dataset {expected} but got {found}")]
    NotBound { expected: String, found: String },
    #[error("no scored solutions")]
    NoScoredSolutions,
    #[error("metric {0} is not reported by this run")]
    UnknownMetric(Metric),
    #[error("solution {0:?} not found")]
    SolutionNotFound(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum SolutionStatus {
    Scored,
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub solution_id: String,
    /// Emission order within the run, starting at 1.
    pub seq: u64,
    pub pipeline: Pipeline,
    pub status: SolutionStatus,
    pub report: Option<ScoreReport>,
}

impl Solution {
    pub fn is_scored(&self) -> bool {
        self.status == SolutionStatus::Scored
    }

    pub fn score(&self, metric: Metric) -> Option<f64> {
        self.report.as_ref().and_then(|r| r.metric(metric))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    BudgetPipelines,
    BudgetTime,
    Exhausted,
    Cancelled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunState {
    Running,
    Finished { reason: FinishReason },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRun {
    pub run_id: String,
    pub spec: ProblemSpec,
    pub dataset_name: String,
    pub dataset_fingerprint: String,
    pub seed: u64,
    pub budget: Budget,
    pub solutions: Vec<Solution>,
    pub state: RunState,
}

impl SearchRun {
    fn new(run_id: &str, spec: &ValidatedSpec, seed: u64) -> Self {
        SearchRun {
            run_id: run_id.to_string(),
            spec: spec.spec().clone(),
            dataset_name: spec.dataset_name().to_string(),
            dataset_fingerprint: spec.dataset_fingerprint().to_string(),
            seed,
            budget: spec.budget,
            solutions: Vec::new(),
            state: RunState::Running,
        }
    }

    pub fn scored(&self) -> impl Iterator<Item = &Solution> {
        self.solutions.iter().filter(|s| s.is_scored())
    }

    pub fn solution(&self, id: &str) -> Result<&Solution, SearchError> {
        self.solutions
            .iter()
            .find(|s| s.solution_id == id)
            .ok_or_else(|| SearchError::SolutionNotFound(id.to_string()))
    }

    /// Solutions with sequence number greater than `cursor`.
    pub fn events_after(&self, cursor: u64) -> &[Solution] {
        let start = self.solutions.partition_point(|s| s.seq <= cursor);
        &self.solutions[start..]
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.state, RunState::Finished { .. })
    }
}

enum Outcome {
    Scored(ScoreReport),
    Failed(String),
    Skipped,
}

/// Runs a search to completion on the calling thread, calling `on_event` for
/// every solution as it is emitted.
pub fn run_search(
    dataset: &Dataset,
    spec: &ValidatedSpec,
    seed: u64,
    run_id: &str,
    cancel: &AtomicBool,
    on_event: &mut dyn FnMut(&Solution),
) -> Result<SearchRun, SearchError> {
    if !spec.is_bound_to(dataset) {
        return Err(SearchError::NotBound {
            expected: spec.dataset_fingerprint().to_string(),
            found: dataset.fingerprint(),
        });
    }
    let start = Instant::now();
    let deadline = start + Duration::from_secs(spec.budget.time_limit_seconds);
    let max = spec.budget.max_pipelines;
    let mut run = SearchRun::new(run_id, spec, seed);

    let features = FeatureTable::from_dataset(dataset, spec.features(), spec.usable_rows())
        .expect("validated features exist");
    let templates = templates(spec.task_type(), &features);
    let mut pool = candidates::CandidatePool::new(&templates);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let primary = spec.primary_metric;
    let mut best: Vec<Option<f64>> = vec![None; templates.len()];

    let mut batch: Vec<(usize, Pipeline)> = (0..templates.len()).filter_map(|t| pool.take(t, 0).map(|p| (t, p))).collect();
    let reason = loop {
        if batch.is_empty() {
            break FinishReason::Exhausted;
        }
        let left = max - run.solutions.len();
        let truncated = batch.len() > left;
        batch.truncate(left);
        let stopped = execute_batch(&batch, dataset, spec, seed, cancel, deadline, &mut |i, outcome| {
            let (t, pipeline) = &batch[i];
            let seq = run.solutions.len() as u64 + 1;
            let (status, report) = match outcome {
                Outcome::Scored(r) => (SolutionStatus::Scored, Some(r)),
                Outcome::Failed(reason) => (SolutionStatus::Failed { reason }, None),
                Outcome::Skipped => return,
            };
            if let Some(score) = report.as_ref().and_then(|r| r.metric(primary)) {
                let better = match best[*t] {
                    None => true,
                    Some(b) if primary.higher_is_better() => score > b,
                    Some(b) => score < b,
                };
                if better {
                    best[*t] = Some(score);
                }
            }
            let solution = Solution {
                solution_id: format!("{run_id}.{seq}"),
                seq,
                pipeline: pipeline.clone(),
                status,
                report,
            };
            on_event(&solution);
            run.solutions.push(solution);
        });
        if stopped {
            break if cancel.load(Ordering::SeqCst) {
                FinishReason::Cancelled
            } else {
                FinishReason::BudgetTime
            };
        }
        if run.solutions.len() >= max {
            break if truncated || pool.total_remaining() > 0 {
                FinishReason::BudgetPipelines
            } else {
                FinishReason::Exhausted
            };
        }
        let left = max - run.solutions.len();
        batch = if pool.total_remaining() <= left {
            pool.take_all()
        } else {
            let mut open: Vec<usize> = (0..templates.len()).filter(|&t| pool.remaining(t) > 0).collect();
            open.sort_by(|&a, &b| compare_scores(best[a], best[b], primary.higher_is_better()).then(a.cmp(&b)));
            open.truncate(open.len().div_ceil(2));
            open.into_iter()
                .filter_map(|t| pool.take_random(t, &mut rng).map(|p| (t, p)))
                .collect()
        };
    };
    run.state = RunState::Finished { reason };
    Ok(run)
}

/// Best first; missing scores last.
fn compare_scores(a: Option<f64>, b: Option<f64>, higher_is_better: bool) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    match (a, b) {
        (Some(x), Some(y)) => {
            let o = x.partial_cmp(&y).unwrap_or(Equal);
            if higher_is_better {
                o.reverse()
            } else {
                o
            }
        }
        (Some(_), None) => Less,
        (None, Some(_)) => Greater,
        (None, None) => Equal,
    }
}

/// Evaluates `batch` on worker threads and hands results to `emit` in batch
/// order. Returns true if cancellation or the deadline cut the batch short.
fn execute_batch(
    batch: &[(usize, Pipeline)],
    dataset: &Dataset,
    spec: &ValidatedSpec,
    seed: u64,
    cancel: &AtomicBool,
    deadline: Instant,
    emit: &mut dyn FnMut(usize, Outcome),
) -> bool {
    let stop = || cancel.load(Ordering::SeqCst) || Instant::now() >= deadline;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(batch.len()).max(1);
    let next = AtomicUsize::new(0);
    let (tx, rx) = crossbeam_channel::unbounded::<(usize, Outcome)>();
    let mut stopped = false;
    std::thread::scope(|s| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            let stop = &stop;
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= batch.len() {
                    break;
                }
                let outcome = if stop() {
                    Outcome::Skipped
                } else {
                    match evaluate_with(&batch[i].1, dataset, spec, seed, stop) {
                        Ok(r) => Outcome::Scored(r),
                        Err(EvalError::Cancelled) => Outcome::Skipped,
                        Err(e) => Outcome::Failed(e.to_string()),
                    }
                };
                if tx.send((i, outcome)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending: Vec<Option<Outcome>> = (0..batch.len()).map(|_| None).collect();
        let mut cursor = 0;
        for (i, outcome) in rx.iter() {
            pending[i] = Some(outcome);
            while cursor < batch.len() {
                let Some(outcome) = pending[cursor].take() else { break };
                stopped |= matches!(outcome, Outcome::Skipped);
                emit(cursor, outcome);
                cursor += 1;
            }
        }
    });
    stopped
}

struct Shared {
    run: Mutex<SearchRun>,
    changed: Condvar,
    cancel: AtomicBool,
}

/// A search running on a background thread.
#[derive(Clone)]
pub struct SearchHandle {
    shared: Arc<Shared>,
}

/// Starts a search on a background thread.
pub fn start_search(
    dataset: Arc<Dataset>,
    spec: ValidatedSpec,
    seed: u64,
    run_id: &str,
) -> Result<SearchHandle, SearchError> {
    if !spec.is_bound_to(&dataset) {
        return Err(SearchError::NotBound {
            expected: spec.dataset_fingerprint().to_string(),
            found: dataset.fingerprint(),
        });
    }
    let shared = Arc::new(Shared {
        run: Mutex::new(SearchRun::new(run_id, &spec, seed)),
        changed: Condvar::new(),
        cancel: AtomicBool::new(false),
    });
    let worker = Arc::clone(&shared);
    let run_id = run_id.to_string();
    std::thread::spawn(move || {
        let mut on_event = |s: &Solution| {
            worker.run.lock().expect("run lock").solutions.push(s.clone());
            worker.changed.notify_all();
        };
        let result = run_search(&dataset, &spec, seed, &run_id, &worker.cancel, &mut on_event);
        let mut run = worker.run.lock().expect("run lock");
        match result {
            Ok(done) => *run = done,
            Err(_) => {
                run.state = RunState::Finished {
                    reason: FinishReason::Cancelled,
                }
            }
        }
        drop(run);
        worker.changed.notify_all();
    });
    Ok(SearchHandle { shared })
}

impl SearchHandle {
    /// Requests cancellation; idempotent.
    pub fn cancel(&self) {
        self.shared.cancel.store(true, Ordering::SeqCst);
    }

    pub fn snapshot(&self) -> SearchRun {
        self.shared.run.lock().expect("run lock").clone()
    }

    pub fn state(&self) -> RunState {
        self.shared.run.lock().expect("run lock").state
    }

    /// Solutions after `cursor` and the run state at the time of the call.
    pub fn events_after(&self, cursor: u64) -> (Vec<Solution>, RunState) {
        let run = self.shared.run.lock().expect("run lock");
        (run.events_after(cursor).to_vec(), run.state)
    }

    /// Blocks until the run finishes.
    pub fn wait(&self) -> SearchRun {
        let mut run = self.shared.run.lock().expect("run lock");
        while !run.is_finished() {
            run = self.shared.changed.wait(run).expect("run lock");
        }
        run.clone()
    }
}
