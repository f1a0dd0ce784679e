//! Session state and its on-disk form.
//!
//! Each session lives in `<root>/<session_id>/`:
//!
//! ```text
//! session.json                 index: ids, dataset files, timestamps
//! datasets/<n>.csv             dataset rows
//! datasets/<n>.sidecar.json    dataset name, dtypes and provenance
//! problems/<problem_id>.json   dataset name and problem spec
//! runs/<run_id>.json           the search run with every solution
//! ```
//!
//! Every file is written to a temporary name and renamed into place.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use curate::augment::{search_augmentations, Corpus};
use curate::data::{prepare, profile, read_dataset, write_csv, Dataset, Sidecar};
use curate::explain::{confusion_matrix, confusion_scatter, extract_rules, partial_dependence};
use curate::pipeline::{diff, fit_pipeline, FittedPipeline};
use curate::problem::{Metric, ProblemSpec, ValidatedSpec};
use curate::search::{
    parallel_coordinates, rank_solutions, start_search, summarize_scores, FinishReason, ParallelCoordinates,
    RunState, ScoreHistogram, SearchError, SearchHandle, SearchRun, Solution,
};

use crate::error::ApiError;
use crate::payload::*;

pub const PREVIEW_ROWS: usize = 10;
pub const DEFAULT_MAX_RULES: usize = 32;

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ApiError {
    ApiError::io(format!("{}: {e}", path.display()))
}

/// Writes `bytes` to `path` through a uniquely named temporary file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ApiError> {
    let dir = path.parent().expect("file has a parent");
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4().simple()));
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), ApiError> {
    let mut text = serde_json::to_vec_pretty(value).expect("state serializes");
    text.push(b'\n');
    write_atomic(path, &text)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ApiError> {
    let text = fs::read(path).map_err(|e| io_err(path, e))?;
    serde_json::from_slice(&text).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DatasetFile {
    name: String,
    file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SessionIndex {
    session_id: String,
    created_at: u64,
    updated_at: u64,
    datasets: Vec<DatasetFile>,
    problems: Vec<String>,
    runs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredProblem {
    problem_id: String,
    dataset: String,
    spec: ProblemSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredRun {
    problem_id: String,
    run: SearchRun,
}

struct Problem {
    dataset: String,
    spec: ValidatedSpec,
}

enum RunSource {
    Live(SearchHandle),
    Done(Box<SearchRun>),
}

struct Run {
    problem_id: String,
    source: RunSource,
    /// Set once the finished run has been written.
    persisted: Arc<Mutex<bool>>,
}

impl Run {
    fn snapshot(&self) -> SearchRun {
        match &self.source {
            RunSource::Live(h) => h.snapshot(),
            RunSource::Done(r) => (**r).clone(),
        }
    }
}

fn persist_finished(path: &Path, problem_id: &str, run: SearchRun, flag: &Mutex<bool>) -> Result<(), ApiError> {
    let mut done = flag.lock().expect("persist flag");
    if *done || !run.is_finished() {
        return Ok(());
    }
    write_json(
        path,
        &StoredRun {
            problem_id: problem_id.to_string(),
            run,
        },
    )?;
    *done = true;
    Ok(())
}

/// One user session. All mutations persist before returning.
pub struct Session {
    dir: PathBuf,
    index: SessionIndex,
    datasets: BTreeMap<String, Arc<Dataset>>,
    problems: BTreeMap<String, Problem>,
    runs: BTreeMap<String, Run>,
    fitted: HashMap<String, Arc<FittedPipeline>>,
}

impl Session {
    fn create(dir: PathBuf, session_id: String) -> Result<Session, ApiError> {
        let t = now();
        let session = Session {
            dir,
            index: SessionIndex {
                session_id,
                created_at: t,
                updated_at: t,
                datasets: Vec::new(),
                problems: Vec::new(),
                runs: Vec::new(),
            },
            datasets: BTreeMap::new(),
            problems: BTreeMap::new(),
            runs: BTreeMap::new(),
            fitted: HashMap::new(),
        };
        session.save_index()?;
        Ok(session)
    }

    fn load(dir: PathBuf) -> Result<Session, ApiError> {
        let index: SessionIndex = read_json(&dir.join("session.json"))?;
        let mut datasets = BTreeMap::new();
        for d in &index.datasets {
            let base = dir.join("datasets");
            let sidecar: Sidecar = read_json(&base.join(format!("{}.sidecar.json", d.file)))?;
            let csv = base.join(format!("{}.csv", d.file));
            let file = fs::File::open(&csv).map_err(|e| io_err(&csv, e))?;
            let ds = read_dataset(file, &sidecar)?;
            datasets.insert(d.name.clone(), Arc::new(ds));
        }
        let mut problems = BTreeMap::new();
        for id in &index.problems {
            let stored: StoredProblem = read_json(&dir.join("problems").join(format!("{id}.json")))?;
            let ds = datasets
                .get(&stored.dataset)
                .ok_or_else(|| ApiError::not_found("DATASET_NOT_FOUND", stored.dataset.clone()))?;
            let spec = stored.spec.validate(ds)?;
            problems.insert(
                id.clone(),
                Problem {
                    dataset: stored.dataset,
                    spec,
                },
            );
        }
        let mut runs = BTreeMap::new();
        for id in &index.runs {
            let path = dir.join("runs").join(format!("{id}.json"));
            let mut stored: StoredRun = read_json(&path)?;
            let finished = stored.run.is_finished();
            if !finished {
                // the process stopped while the search was running
                stored.run.state = RunState::Finished {
                    reason: FinishReason::Cancelled,
                };
                write_json(&path, &stored)?;
            }
            runs.insert(
                id.clone(),
                Run {
                    problem_id: stored.problem_id,
                    source: RunSource::Done(Box::new(stored.run)),
                    persisted: Arc::new(Mutex::new(true)),
                },
            );
        }
        Ok(Session {
            dir,
            index,
            datasets,
            problems,
            runs,
            fitted: HashMap::new(),
        })
    }

    fn save_index(&self) -> Result<(), ApiError> {
        write_json(&self.dir.join("session.json"), &self.index)
    }

    fn touch(&mut self) -> Result<(), ApiError> {
        self.index.updated_at = now();
        self.save_index()
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            session_id: self.index.session_id.clone(),
            created_at: self.index.created_at,
            updated_at: self.index.updated_at,
            datasets: self.index.datasets.iter().map(|d| d.name.clone()).collect(),
            problems: self.index.problems.clone(),
            runs: self.index.runs.clone(),
        }
    }

    pub fn dataset(&self, name: &str) -> Result<Arc<Dataset>, ApiError> {
        self.datasets
            .get(name)
            .cloned()
            .ok_or_else(|| ApiError::not_found("DATASET_NOT_FOUND", format!("no dataset named {name:?}")))
    }

    /// Registers `dataset` under `name` and writes it to disk.
    pub fn add_dataset(&mut self, name: &str, dataset: Dataset) -> Result<DatasetView, ApiError> {
        if name.is_empty() {
            return Err(ApiError::bad_request("INVALID_NAME", "dataset name is empty"));
        }
        if self.datasets.contains_key(name) {
            return Err(ApiError::conflict("DATASET_EXISTS", format!("dataset {name:?} already exists")));
        }
        let dataset = dataset.with_name(name);
        let file = format!("d{}", self.index.datasets.len() + 1);
        let base = self.dir.join("datasets");
        let mut csv = Vec::new();
        write_csv(&dataset, &mut csv)?;
        write_atomic(&base.join(format!("{file}.csv")), &csv)?;
        write_json(&base.join(format!("{file}.sidecar.json")), &Sidecar::of(&dataset))?;
        self.index.datasets.push(DatasetFile {
            name: name.to_string(),
            file,
        });
        let view = dataset_view(&dataset);
        self.datasets.insert(name.to_string(), Arc::new(dataset));
        self.touch()?;
        Ok(view)
    }

    pub fn prepare_dataset(&mut self, name: &str, req: &PrepareRequest) -> Result<DatasetView, ApiError> {
        let source = self.dataset(name)?;
        let prepared = prepare(&source, &req.actions)?;
        let target = req.name.clone().unwrap_or_else(|| format!("{name}-prepared"));
        self.add_dataset(&target, prepared)
    }

    pub fn add_problem(&mut self, req: &ProblemRequest) -> Result<ProblemView, ApiError> {
        let dataset = self.dataset(&req.dataset)?;
        let spec = ProblemSpec::from_json(&req.spec)?;
        let validated = spec.validate(&dataset)?;
        let problem_id = format!("p{}", self.index.problems.len() + 1);
        write_json(
            &self.dir.join("problems").join(format!("{problem_id}.json")),
            &StoredProblem {
                problem_id: problem_id.clone(),
                dataset: req.dataset.clone(),
                spec,
            },
        )?;
        self.index.problems.push(problem_id.clone());
        self.problems.insert(
            problem_id.clone(),
            Problem {
                dataset: req.dataset.clone(),
                spec: validated,
            },
        );
        self.touch()?;
        self.problem_view(&problem_id)
    }

    fn problem(&self, id: &str) -> Result<&Problem, ApiError> {
        self.problems
            .get(id)
            .ok_or_else(|| ApiError::not_found("PROBLEM_NOT_FOUND", format!("no problem {id:?}")))
    }

    pub fn problem_view(&self, id: &str) -> Result<ProblemView, ApiError> {
        let p = self.problem(id)?;
        Ok(ProblemView {
            problem_id: id.to_string(),
            dataset: p.dataset.clone(),
            spec: p.spec.spec().clone(),
            usable_rows: p.spec.usable_rows().len(),
            excluded_rows: p.spec.excluded_rows().len(),
        })
    }

    /// Starts a background search and a thread that persists it on finish.
    pub fn start_run(&mut self, problem_id: &str, seed: u64) -> Result<RunView, ApiError> {
        let problem = self.problem(problem_id)?;
        let dataset = self.dataset(&problem.dataset)?;
        let run_id = format!("r{}", self.index.runs.len() + 1);
        let handle = start_search(dataset, problem.spec.clone(), seed, &run_id)?;
        let path = self.dir.join("runs").join(format!("{run_id}.json"));
        write_json(
            &path,
            &StoredRun {
                problem_id: problem_id.to_string(),
                run: handle.snapshot(),
            },
        )?;
        let persisted = Arc::new(Mutex::new(false));
        let (watch, flag, pid) = (handle.clone(), Arc::clone(&persisted), problem_id.to_string());
        std::thread::spawn(move || {
            let run = watch.wait();
            if let Err(e) = persist_finished(&path, &pid, run, &flag) {
                log::error!("could not persist run: {e}");
            }
        });
        self.index.runs.push(run_id.clone());
        self.runs.insert(
            run_id.clone(),
            Run {
                problem_id: problem_id.to_string(),
                source: RunSource::Live(handle),
                persisted,
            },
        );
        self.touch()?;
        self.run_view(&run_id)
    }

    fn run(&self, id: &str) -> Result<&Run, ApiError> {
        self.runs
            .get(id)
            .ok_or_else(|| ApiError::not_found("RUN_NOT_FOUND", format!("no run {id:?}")))
    }

    /// Snapshot of a run; a finished live run is persisted before it is returned.
    pub fn run_snapshot(&self, id: &str) -> Result<SearchRun, ApiError> {
        let run = self.run(id)?;
        let snapshot = run.snapshot();
        if let RunSource::Live(_) = run.source {
            let path = self.dir.join("runs").join(format!("{id}.json"));
            persist_finished(&path, &run.problem_id, snapshot.clone(), &run.persisted)?;
        }
        Ok(snapshot)
    }

    pub fn run_view(&self, id: &str) -> Result<RunView, ApiError> {
        let snap = self.run_snapshot(id)?;
        let problem_id = self.run(id)?.problem_id.clone();
        Ok(RunView {
            run_id: snap.run_id.clone(),
            dataset: snap.dataset_name.clone(),
            problem_id,
            seed: snap.seed,
            budget: snap.budget,
            state: snap.state,
            solutions: snap.solutions.len(),
            scored: snap.scored().count(),
        })
    }

    pub fn events(&self, id: &str, cursor: u64) -> Result<EventsPage, ApiError> {
        let snap = self.run_snapshot(id)?;
        let solutions = snap.events_after(cursor).to_vec();
        Ok(EventsPage {
            run_id: snap.run_id.clone(),
            cursor,
            next_cursor: solutions.last().map_or(cursor, |s| s.seq),
            state: snap.state,
            solutions,
        })
    }

    /// Requests cancellation; cancelling a finished run is a no-op.
    pub fn cancel(&self, id: &str) -> Result<RunView, ApiError> {
        if let RunSource::Live(h) = &self.run(id)?.source {
            h.cancel();
        }
        self.run_view(id)
    }

    pub fn solutions(&self, id: &str, metric: Option<Metric>) -> Result<SolutionTable, ApiError> {
        let snap = self.run_snapshot(id)?;
        let metric = metric.unwrap_or(snap.spec.primary_metric);
        if !snap.spec.report_metrics.contains(&metric) {
            return Err(SearchError::UnknownMetric(metric).into());
        }
        let ranking = if snap.scored().next().is_some() {
            rank_solutions(&snap, metric)?
        } else {
            Vec::new()
        };
        let row = |s: &Solution, rank: Option<usize>| SolutionRow {
            rank,
            solution_id: s.solution_id.clone(),
            seq: s.seq,
            pipeline_id: s.pipeline.id().to_string(),
            description: s.pipeline.describe(),
            steps: s.pipeline.steps().to_vec(),
            status: s.status.clone(),
            scores: s.report.as_ref().map(|r| r.metrics.clone()).unwrap_or_default(),
        };
        let mut rows: Vec<SolutionRow> = ranking
            .iter()
            .enumerate()
            .map(|(i, sid)| row(snap.solution(sid).expect("ranked id exists"), Some(i + 1)))
            .collect();
        rows.extend(snap.solutions.iter().filter(|s| !ranking.contains(&s.solution_id)).map(|s| row(s, None)));
        Ok(SolutionTable {
            run_id: snap.run_id.clone(),
            metric,
            state: snap.state,
            rows,
        })
    }

    pub fn summary(&self, id: &str, metric: Option<Metric>) -> Result<ScoreHistogram, ApiError> {
        let snap = self.run_snapshot(id)?;
        let metric = metric.unwrap_or(snap.spec.primary_metric);
        Ok(summarize_scores(&snap, metric)?)
    }

    pub fn parallel(&self, id: &str) -> Result<ParallelCoordinates, ApiError> {
        Ok(parallel_coordinates(&self.run_snapshot(id)?)?)
    }

    pub fn solution(&self, run_id: &str, solution_id: &str) -> Result<Solution, ApiError> {
        Ok(self.run_snapshot(run_id)?.solution(solution_id)?.clone())
    }

    /// Looks up a solution by its session-wide id `{run_id}.{seq}`.
    fn solution_anywhere(&self, solution_id: &str) -> Result<Solution, ApiError> {
        let not_found = || ApiError::not_found("SOLUTION_NOT_FOUND", format!("solution {solution_id:?} not found"));
        let (run_id, _) = solution_id.rsplit_once('.').ok_or_else(not_found)?;
        if !self.runs.contains_key(run_id) {
            return Err(not_found());
        }
        self.solution(run_id, solution_id)
    }

    pub fn compare(&self, a: &str, b: &str) -> Result<Comparison, ApiError> {
        let (a, b) = (self.solution_anywhere(a)?, self.solution_anywhere(b)?);
        let compared = |s: Solution| ComparedSolution {
            solution_id: s.solution_id,
            pipeline: s.pipeline,
            report: s.report,
        };
        Ok(Comparison {
            diff: diff(&a.pipeline, &b.pipeline),
            a: compared(a),
            b: compared(b),
        })
    }

    /// Computes one explanation, refitting the pipeline on the problem's
    /// usable rows the first time a model-based explanation is requested.
    pub fn explain(
        &mut self,
        run_id: &str,
        solution_id: &str,
        kind: &str,
        feature: Option<&str>,
        max_rules: Option<usize>,
    ) -> Result<Explanation, ApiError> {
        let solution = self.solution(run_id, solution_id)?;
        let problem = self.problem(&self.run(run_id)?.problem_id)?;
        let (dataset, spec) = (self.dataset(&problem.dataset)?, problem.spec.clone());
        let cache = &mut self.fitted;
        let mut fitted = || -> Result<Arc<FittedPipeline>, ApiError> {
            if let Some(f) = cache.get(solution_id) {
                return Ok(Arc::clone(f));
            }
            let f = Arc::new(fit_pipeline(&solution.pipeline, &dataset, &spec, spec.usable_rows())?);
            cache.insert(solution_id.to_string(), Arc::clone(&f));
            Ok(f)
        };
        explain_solution(&solution, kind, feature, max_rules, &mut fitted, &dataset, &spec)
    }

    pub fn augmentations(&self, corpus: &Corpus, dataset: &str, keywords: &str) -> Result<AugmentResults, ApiError> {
        let ds = self.dataset(dataset)?;
        Ok(AugmentResults {
            dataset: dataset.to_string(),
            keywords: keywords.to_string(),
            candidates: search_augmentations(corpus, &ds, keywords),
        })
    }

    pub fn apply_augmentation(
        &mut self,
        corpus: &Corpus,
        dataset: &str,
        req: &ApplyRequest,
    ) -> Result<DatasetView, ApiError> {
        let ds = self.dataset(dataset)?;
        let augmented = corpus.apply(&ds, &req.candidate)?;
        let name = req.name.clone().unwrap_or_else(|| augmented.name().to_string());
        self.add_dataset(&name, augmented)
    }
}

/// Dispatches on the explanation kind: `confusion_matrix`, `scatter`,
/// `rules` (with `max_rules`) or `pdp` (with `feature`).
pub fn explain_solution(
    solution: &Solution,
    kind: &str,
    feature: Option<&str>,
    max_rules: Option<usize>,
    fitted: &mut dyn FnMut() -> Result<Arc<FittedPipeline>, ApiError>,
    dataset: &Dataset,
    spec: &ValidatedSpec,
) -> Result<Explanation, ApiError> {
    let report = || {
        solution.report.as_ref().ok_or_else(|| {
            ApiError::conflict("SOLUTION_NOT_SCORED", format!("solution {} has no scores", solution.solution_id))
        })
    };
    Ok(match kind {
        "confusion_matrix" => Explanation::ConfusionMatrix(confusion_matrix(report()?)?),
        "scatter" => Explanation::Scatter(confusion_scatter(report()?)?),
        "rules" => {
            report()?;
            let f = fitted()?;
            Explanation::Rules(extract_rules(&f, dataset, spec, max_rules.unwrap_or(DEFAULT_MAX_RULES))?)
        }
        "pdp" => {
            let feature =
                feature.ok_or_else(|| ApiError::bad_request("MISSING_PARAMETER", "pdp needs a feature parameter"))?;
            report()?;
            let f = fitted()?;
            Explanation::Pdp(partial_dependence(&f, dataset, spec, feature)?)
        }
        other => {
            return Err(ApiError::bad_request(
                "UNKNOWN_EXPLANATION_KIND",
                format!("unknown explanation kind {other:?}; expected confusion_matrix, rules, pdp or scatter"),
            ))
        }
    })
}

pub fn dataset_view(ds: &Dataset) -> DatasetView {
    DatasetView {
        name: ds.name().to_string(),
        row_count: ds.row_count(),
        fingerprint: ds.fingerprint(),
        provenance: ds.provenance().clone(),
        columns: ds.columns().iter().map(curate::data::ColumnSchema::of).collect(),
        profiles: profile(ds),
        preview: ds.preview(PREVIEW_ROWS),
    }
}

/// Server-wide state: the session root, the corpus and the default seed.
pub struct Store {
    root: PathBuf,
    corpus: Arc<Corpus>,
    default_seed: u64,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

impl Store {
    pub fn new(root: PathBuf, corpus: Corpus, default_seed: u64) -> Self {
        Store {
            root,
            corpus: Arc::new(corpus),
            default_seed,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn default_seed(&self) -> u64 {
        self.default_seed
    }

    pub fn create_session(&self) -> Result<SessionView, ApiError> {
        let id = uuid::Uuid::new_v4().to_string();
        let session = Session::create(self.root.join(&id), id.clone())?;
        let view = session.view();
        self.sessions.lock().expect("sessions").insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    /// The session with `id`, loading it from disk when it is not in memory.
    pub fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        let not_found = || ApiError::not_found("SESSION_NOT_FOUND", format!("no session {id:?}"));
        let mut sessions = self.sessions.lock().expect("sessions");
        if let Some(s) = sessions.get(id) {
            return Ok(Arc::clone(s));
        }
        if uuid::Uuid::parse_str(id).is_err() {
            return Err(not_found());
        }
        let dir = self.root.join(id);
        if !dir.join("session.json").is_file() {
            return Err(not_found());
        }
        let session = Arc::new(Mutex::new(Session::load(dir)?));
        sessions.insert(id.to_string(), Arc::clone(&session));
        Ok(session)
    }

    /// Runs `f` with the session locked.
    pub fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let session = self.session(id)?;
        let mut guard = session.lock().expect("session lock");
        f(&mut guard)
    }
}
