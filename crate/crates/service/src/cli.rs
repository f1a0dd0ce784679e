//! The `curate` command line: headless runs, the API server and demo data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use curate::augment::{index_corpus, search_augmentations, AugmentCandidate, Corpus, Operation};
use curate::data::{ingest_csv, Dataset, Dtype};
use curate::pipeline::fit_pipeline;
use curate::problem::{ProblemSpec, TaskType, ValidatedSpec};
use curate::search::{rank_solutions, run_search, SearchRun};

use crate::error::ApiError;
use crate::payload::Explanation;
use crate::store::{explain_solution, write_atomic, Store};

/// Solutions explained by `run`, taken from the top of the ranking.
pub const EXPLAINED_SOLUTIONS: usize = 5;

#[derive(Debug, Parser)]
#[command(name = "curate", version, about = "Human-guided AutoML engine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search pipelines for a dataset and problem and write the results.
    Run(RunArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Write the synthetic demo dataset, problem and corpus.
    DemoData(DemoArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Dataset CSV file.
    #[arg(long)]
    pub data: PathBuf,
    /// Problem specification JSON file.
    #[arg(long)]
    pub problem: PathBuf,
    /// Corpus directory searched for augmentations.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Keywords for the augmentation search.
    #[arg(long, default_value = "")]
    pub keywords: String,
    /// Apply this augmentation candidate before searching; joined columns become features.
    #[arg(long, requires = "corpus")]
    pub augment: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "CURATE_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: String,
    /// Corpus directory; without one augmentation searches return nothing.
    #[arg(long, env = "CURATE_CORPUS")]
    pub corpus: Option<PathBuf>,
    /// Directory holding one subdirectory per session.
    #[arg(long, env = "CURATE_SESSIONS", default_value = "sessions")]
    pub sessions: PathBuf,
    /// Seed for searches that do not specify one.
    #[arg(long, env = "CURATE_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Failure of a CLI command with its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("no pipeline produced a defined primary metric score")]
    NoScoredSolutions,
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) | CliError::Io(_) => 1,
            CliError::NoScoredSolutions => 2,
        }
    }
}

impl From<ApiError> for CliError {
    fn from(e: ApiError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn invalid(what: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("{}: {e}", what.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|e| CliError::Io(e.message))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_vec_pretty(value).expect("output serializes");
    text.push(b'\n');
    write(path, &text)
}

fn load_inputs(args: &RunArgs) -> Result<(Dataset, ProblemSpec), CliError> {
    let name = args.data.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string();
    let csv = fs::read(&args.data).map_err(|e| invalid(&args.data, e))?;
    let dataset = ingest_csv(csv.as_slice(), &name).map_err(|e| invalid(&args.data, e))?;
    let text = fs::read_to_string(&args.problem).map_err(|e| invalid(&args.problem, e))?;
    let spec = ProblemSpec::parse(&text).map_err(|e| invalid(&args.problem, e))?;
    Ok((dataset, spec))
}

/// Applies the chosen candidate and adds its usable joined columns to the
/// problem's features.
fn augment(
    corpus: &Corpus,
    dataset: Dataset,
    spec: &mut ProblemSpec,
    candidate: &AugmentCandidate,
) -> Result<Dataset, CliError> {
    let augmented = corpus.apply(&dataset, candidate).map_err(|e| CliError::Invalid(e.to_string()))?;
    if let Operation::Join { plan } = &candidate.operation {
        for c in &plan.carried {
            let column = augmented.column(&c.output).expect("joined column");
            if column.dtype() != Dtype::Text && !spec.features.contains(&c.output) {
                spec.features.push(c.output.clone());
            }
        }
    }
    Ok(augmented)
}

fn explanations(run: &SearchRun, dataset: &Dataset, spec: &ValidatedSpec) -> Result<Vec<(String, Vec<Explanation>)>, CliError> {
    let ranked = match rank_solutions(run, spec.primary_metric) {
        Ok(r) => r,
        Err(_) => return Ok(Vec::new()),
    };
    let mut kinds: Vec<(&str, Option<&str>)> = match spec.task_type() {
        TaskType::Classification => vec![("confusion_matrix", None), ("rules", None)],
        TaskType::Regression => vec![("scatter", None)],
    };
    kinds.extend(spec.features().iter().map(|f| ("pdp", Some(f.as_str()))));
    let mut out = Vec::new();
    for id in ranked.iter().take(EXPLAINED_SOLUTIONS) {
        let solution = run.solution(id).expect("ranked id exists");
        let mut cache = None;
        let mut fitted = || -> Result<_, ApiError> {
            if cache.is_none() {
                cache = Some(Arc::new(fit_pipeline(&solution.pipeline, dataset, spec, spec.usable_rows())?));
            }
            Ok(Arc::clone(cache.as_ref().expect("fitted")))
        };
        let mut artifacts = Vec::new();
        for (kind, feature) in &kinds {
            match explain_solution(solution, kind, *feature, None, &mut fitted, dataset, spec) {
                Ok(e) => artifacts.push(e),
                Err(e) => log::info!("skipping {kind} for {id}: {e}"),
            }
        }
        out.push((id.clone(), artifacts));
    }
    Ok(out)
}

fn ranking_table(run: &SearchRun) -> String {
    let metrics = &run.spec.report_metrics;
    let ranked = rank_solutions(run, run.spec.primary_metric).unwrap_or_default();
    let mut rows: Vec<Vec<String>> = vec![["rank", "solution"]
        .iter()
        .map(|s| s.to_string())
        .chain(metrics.iter().map(|m| m.as_str().to_string()))
        .chain(["pipeline".to_string()])
        .collect()];
    for (i, id) in ranked.iter().enumerate() {
        let s = run.solution(id).expect("ranked id exists");
        let mut row = vec![(i + 1).to_string(), id.clone()];
        row.extend(metrics.iter().map(|&m| s.score(m).map_or("-".to_string(), |v| format!("{v:.6}"))));
        row.push(s.pipeline.describe());
        rows.push(row);
    }
    for s in run.solutions.iter().filter(|s| !s.is_scored()) {
        let mut row = vec!["-".to_string(), s.solution_id.clone()];
        row.extend(metrics.iter().map(|_| "-".to_string()));
        row.push(format!("{} (failed)", s.pipeline.describe()));
        rows.push(row);
    }
    let columns = rows[0].len();
    let widths: Vec<usize> = (0..columns).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut text = String::new();
    for row in &rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c + 1 == columns {
                line.push_str(cell);
            } else {
                let _ = write!(line, "{cell:<w$}  ", w = widths[c]);
            }
        }
        text.push_str(line.trim_end());
        text.push('\n');
    }
    text
}

/// Runs the headless workflow and writes `solutions.json`, `ranking.txt`,
/// `explanations/<solution_id>.json` and, with a corpus,
/// `augmentations.json` into `args.out`.
pub fn run(args: &RunArgs) -> Result<SearchRun, CliError> {
    let (mut dataset, mut spec) = load_inputs(args)?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    if let Some(dir) = &args.corpus {
        let corpus = index_corpus(dir).map_err(|e| invalid(dir, e))?;
        for w in corpus.warnings() {
            eprintln!("warning: skipped corpus entry {w}");
        }
        let candidates = search_augmentations(&corpus, &dataset, &args.keywords);
        write_json(&args.out.join("augmentations.json"), &candidates)?;
        if let Some(id) = &args.augment {
            let candidate = candidates
                .iter()
                .find(|c| &c.candidate_id == id)
                .ok_or_else(|| CliError::Invalid(format!("no augmentation candidate {id:?}")))?;
            dataset = augment(&corpus, dataset, &mut spec, candidate)?;
        }
    }
    let validated = spec.validate(&dataset).map_err(|e| invalid(&args.problem, e))?;
    let cancel = AtomicBool::new(false);
    let mut progress = |s: &curate::search::Solution| log::info!("solution {} {}", s.solution_id, s.pipeline.describe());
    let run = run_search(&dataset, &validated, args.seed, "run", &cancel, &mut progress)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    write_json(&args.out.join("solutions.json"), &run)?;
    write(&args.out.join("ranking.txt"), ranking_table(&run).as_bytes())?;
    let dir = args.out.join("explanations");
    for (id, artifacts) in explanations(&run, &dataset, &validated)? {
        write_json(&dir.join(format!("{id}.json")), &artifacts)?;
    }
    let primary = run.spec.primary_metric;
    if !run.scored().any(|s| s.score(primary).is_some()) {
        return Err(CliError::NoScoredSolutions);
    }
    Ok(run)
}

pub fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let corpus = match &args.corpus {
        Some(dir) => {
            let corpus = index_corpus(dir).map_err(|e| invalid(dir, e))?;
            log::info!("indexed {} corpus entries from {}", corpus.len(), dir.display());
            corpus
        }
        None => Corpus::default(),
    };
    fs::create_dir_all(&args.sessions).map_err(|e| invalid(&args.sessions, e))?;
    let store = Arc::new(Store::new(args.sessions.clone(), corpus, args.seed));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&args.listen)
            .await
            .map_err(|e| CliError::Io(format!("{}: {e}", args.listen)))?;
        log::info!("listening on {}", args.listen);
        crate::api::serve(listener, store).await.map_err(|e| CliError::Io(e.to_string()))
    })
}

pub fn demo_data(args: &DemoArgs) -> Result<(), CliError> {
    curate::demo::write_demo(&args.out, args.seed).map_err(|e| CliError::Io(e.to_string()))
}

/// Parses nothing; dispatches an already parsed command line.
pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(args) => {
            let run = run(args)?;
            println!(
                "{} solutions, {} scored; results in {}",
                run.solutions.len(),
                run.scored().count(),
                args.out.display()
            );
            Ok(())
        }
        Command::Serve(args) => serve(args),
        Command::DemoData(args) => demo_data(args),
    }
}
