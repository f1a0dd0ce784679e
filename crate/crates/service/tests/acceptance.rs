//! Acceptance suite: one PASS/FAIL line per criterion, each within its time
//! limit. Exits nonzero when any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{NaiveDate, NaiveDateTime};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use curate::augment::{search_augmentations, Corpus, CorpusEntry, CorpusMeta, JoinKind, Operation};
use curate::data::{Column, ColumnData, Dataset, Granularity, Provenance};
use curate::demo;
use curate::evaluation::{assign_folds, compute_metric, evaluate, EvalError};
use curate::explain::{confusion_matrix, confusion_scatter, extract_rules, partial_dependence};
use curate::pipeline::{fit_pipeline, Pipeline};
use curate::primitives::{PrimitiveName, PrimitiveSpec, Target};
use curate::problem::{Budget, EvalMethod, Metric, ProblemSpec, TaskType, ValidatedSpec};
use curate::search::{run_search, FinishReason, RunState, SearchRun};

type Check = Result<String, String>;
type Criterion = (u8, &'static str, u64, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

const TOL: f64 = 1e-12;

// ---------------------------------------------------------------- metrics

fn macro_oracle(t: &[usize], p: &[usize]) -> (f64, f64, f64) {
    let mut m = [[0usize; 4]; 4];
    for (&a, &b) in t.iter().zip(p) {
        m[a][b] += 1;
    }
    let present: Vec<usize> = (0..4).filter(|&c| (0..4).any(|j| m[c][j] + m[j][c] > 0)).collect();
    let (mut ps, mut rs, mut fs) = (0.0, 0.0, 0.0);
    for &c in &present {
        let col: usize = (0..4).map(|r| m[r][c]).sum();
        let row: usize = m[c].iter().sum();
        let pr = if col == 0 { 0.0 } else { m[c][c] as f64 / col as f64 };
        let rc = if row == 0 { 0.0 } else { m[c][c] as f64 / row as f64 };
        ps += pr;
        rs += rc;
        fs += if pr + rc == 0.0 { 0.0 } else { 2.0 * pr * rc / (pr + rc) };
    }
    let k = present.len() as f64;
    (ps / k, rs / k, fs / k)
}

fn metric_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let labels = |v: &[usize]| Target::Labels(v.iter().map(|c| format!("c{c}")).collect());
    let mut worst = 0.0f64;
    let instances = 1000;
    for i in 0..instances {
        let n = rng.random_range(1..=50);
        let classes = rng.random_range(1..=4);
        let t: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let p: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let acc = t.iter().zip(&p).filter(|(a, b)| a == b).count() as f64 / n as f64;
        let (pr, rc, f1) = macro_oracle(&t, &p);
        let (yt, yp) = (labels(&t), labels(&p));
        for (metric, expected) in [(Metric::Accuracy, acc), (Metric::Precision, pr), (Metric::Recall, rc), (Metric::F1, f1)] {
            let got = compute_metric(metric, &yt, &yp).map_err(|e| format!("instance {i}: {metric}: {e}"))?;
            worst = worst.max((got - expected).abs());
            ensure!((got - expected).abs() <= TOL, "instance {i}: {metric} {got} vs {expected}");
        }

        let n = rng.random_range(1..=50);
        let t: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let nf = n as f64;
        let abs: f64 = t.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        let sq: f64 = t.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
        let mean = t.iter().sum::<f64>() / nf;
        let sst: f64 = t.iter().map(|v| (v - mean) * (v - mean)).sum();
        let (yt, yp) = (Target::Numeric(t), Target::Numeric(p));
        let r2 = (sst > 0.0).then(|| 1.0 - sq / sst);
        for (metric, expected) in [
            (Metric::Mae, Some(abs / nf)),
            (Metric::Mse, Some(sq / nf)),
            (Metric::Rmse, Some((sq / nf).sqrt())),
            (Metric::R2, r2),
        ] {
            match (compute_metric(metric, &yt, &yp), expected) {
                (Ok(got), Some(e)) => {
                    worst = worst.max((got - e).abs());
                    ensure!((got - e).abs() <= TOL, "instance {i}: {metric} {got} vs {e}");
                }
                (Err(EvalError::UndefinedMetric { .. }), None) => {}
                (got, e) => return Err(format!("instance {i}: {metric} gave {got:?}, oracle {e:?}")),
            }
        }
    }
    Ok(format!("{instances} classification + {instances} regression instances, max abs diff {worst:.1e}"))
}

// ---------------------------------------------------------------- folds

fn line(n: usize) -> Dataset {
    Dataset::new(
        "line",
        vec![
            Column::numeric("x", (0..n).map(|i| Some(i as f64)).collect()),
            Column::numeric("collisions", (0..n).map(|i| Some(0.5 * i as f64 - 3.0)).collect()),
        ],
        Provenance::Uploaded,
    )
    .expect("columns align")
}

fn cv_laws() -> Check {
    let baseline = Pipeline::of(&[PrimitiveName::MeanBaseline]).expect("pipeline");
    let mut cases = 0;
    for k in [2, 5, 10] {
        for n in 11..=200 {
            let a = assign_folds(n, k, n as u64 * 31 + k as u64, None).map_err(|e| e.to_string())?;
            ensure!(a.folds.len() == n, "n={n} k={k}: {} assignments", a.folds.len());
            let mut members: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
            for (row, &f) in a.folds.iter().enumerate() {
                ensure!(f < k, "n={n} k={k}: fold {f}");
                members[f].insert(row);
            }
            let union: BTreeSet<usize> = members.iter().flatten().copied().collect();
            let total: usize = members.iter().map(BTreeSet::len).sum();
            ensure!(union.len() == n && total == n, "n={n} k={k}: folds not a partition");
            let sizes: Vec<usize> = members.iter().map(BTreeSet::len).collect();
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            ensure!(hi - lo <= 1, "n={n} k={k}: sizes {sizes:?}");

            let ds = line(n);
            let mut spec = demo::problem(&["x"]);
            spec.eval_method = EvalMethod::Kfold { k };
            let spec = spec.validate(&ds).map_err(|e| e.to_string())?;
            let report = evaluate(&baseline, &ds, &spec, 7).map_err(|e| e.to_string())?;
            let mut seen = vec![0usize; n];
            for p in &report.predictions {
                seen[p.row] += 1;
            }
            ensure!(seen.iter().all(|&c| c == 1), "n={n} k={k}: out-of-fold counts {seen:?}");
            cases += 1;
        }
    }
    Ok(format!("{cases} (k, n) cases"))
}

// ---------------------------------------------------------------- search

fn synthetic(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.1).expect("sd");
    let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..n).map(|i| 3.0 * x1[i] - 2.0 * x2[i] + noise.sample(&mut rng)).collect();
    Dataset::new(
        "synthetic",
        vec![
            Column::numeric("x1", x1.into_iter().map(Some).collect()),
            Column::numeric("x2", x2.into_iter().map(Some).collect()),
            Column::numeric("y", y.into_iter().map(Some).collect()),
        ],
        Provenance::Uploaded,
    )
    .expect("columns align")
}

fn regression_spec(ds: &Dataset, max_pipelines: usize, time_limit_seconds: u64) -> ValidatedSpec {
    ProblemSpec {
        task_type: TaskType::Regression,
        target: "y".into(),
        features: vec!["x1".into(), "x2".into()],
        primary_metric: Metric::R2,
        report_metrics: Metric::for_task(TaskType::Regression),
        eval_method: EvalMethod::Kfold { k: 5 },
        budget: Budget {
            max_pipelines,
            time_limit_seconds,
        },
    }
    .validate(ds)
    .expect("valid spec")
}

fn search(ds: &Dataset, spec: &ValidatedSpec, seed: u64) -> Result<(SearchRun, Vec<String>), String> {
    let mut stream = Vec::new();
    let run = run_search(ds, spec, seed, "run", &AtomicBool::new(false), &mut |s| {
        stream.push(serde_json::to_string(s).expect("solution serializes"))
    })
    .map_err(|e| e.to_string())?;
    Ok((run, stream))
}

fn search_determinism_and_budget() -> Check {
    let ds = synthetic(150, 1);
    for seed in [3, 42] {
        let s = regression_spec(&ds, 20, 600);
        let (a, sa) = search(&ds, &s, seed)?;
        let (b, sb) = search(&ds, &s, seed)?;
        ensure!(sa == sb, "seed {seed}: streams differ");
        ensure!(a == b, "seed {seed}: final runs differ");
    }
    for max in [1, 5, 20] {
        let (run, stream) = search(&ds, &regression_spec(&ds, max, 600), 7)?;
        ensure!(run.solutions.len() <= max && stream.len() <= max, "budget {max}: {} solutions", run.solutions.len());
    }
    let big = synthetic(4000, 2);
    let limit = 1.0;
    let started = Instant::now();
    let (run, _) = search(&big, &regression_spec(&big, 100_000, 1), 5)?;
    let elapsed = started.elapsed().as_secs_f64();
    ensure!(
        run.state == RunState::Finished { reason: FinishReason::BudgetTime },
        "time-limited run ended with {:?}",
        run.state
    );
    ensure!(elapsed <= 1.1 * limit, "time-limited run took {elapsed:.3}s for a {limit}s limit");
    Ok(format!("streams identical, budgets held, {limit}s limit stopped after {elapsed:.3}s"))
}

/// In-sample r2 of the least-squares fit with intercept.
fn least_squares_r2(ds: &Dataset) -> f64 {
    let col = |name: &str| -> Vec<f64> {
        ds.column(name).unwrap().data.as_numeric().unwrap().iter().map(|v| v.unwrap()).collect()
    };
    let (x1, x2, y) = (col("x1"), col("x2"), col("y"));
    let n = y.len();
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => x1[i],
        _ => x2[i],
    });
    let y = DVector::from_vec(y);
    let beta = x.clone().svd(true, true).solve(&y, 1e-12).expect("solvable");
    let resid = &y - &x * beta;
    let mean = y.mean();
    1.0 - resid.norm_squared() / y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
}

fn synthetic_recovery() -> Check {
    let ds = synthetic(500, 4);
    let oracle = least_squares_r2(&ds);
    let (run, _) = search(&ds, &regression_spec(&ds, 50, 600), 11)?;
    ensure!(run.solutions.len() <= 50, "{} solutions", run.solutions.len());
    let best = run.scored().filter_map(|s| s.score(Metric::R2)).fold(f64::NEG_INFINITY, f64::max);
    ensure!(oracle >= 0.9, "least-squares oracle r2 {oracle:.4} is below the bound");
    ensure!(best >= 0.9, "best out-of-sample r2 {best:.4} (oracle {oracle:.4})");
    Ok(format!("best out-of-sample r2 {best:.4}, least-squares oracle {oracle:.4}"))
}

// ---------------------------------------------------------------- augmentation

fn entry(ds: Dataset, description: &str, keywords: &[&str]) -> CorpusEntry {
    CorpusEntry {
        path: format!("{}.csv", ds.name()).into(),
        meta: CorpusMeta::of(&ds, description, keywords),
        dataset: Arc::new(ds),
    }
}

fn best_mae(ds: &Dataset, features: &[&str]) -> Result<f64, String> {
    let spec = demo::problem(features).validate(ds).map_err(|e| e.to_string())?;
    let (run, _) = search(ds, &spec, 3)?;
    Ok(run.scored().filter_map(|s| s.score(Metric::Mae)).fold(f64::INFINITY, f64::min))
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
}

fn augmentation_improves_model() -> Check {
    let data = demo::generate(common::DEMO_SEED);
    let corpus = Corpus::from_entries(data.corpus.into_iter().map(|c| entry(c.dataset, c.description, c.keywords)).collect());
    let query = &data.collisions;
    let found = search_augmentations(&corpus, query, "weather");
    let weather = found.first().ok_or("no candidate for \"weather\"")?;
    ensure!(weather.entry.name == demo::WEATHER, "top candidate is {}", weather.entry.name);
    let Operation::Join { plan } = &weather.operation else {
        return Err(format!("top candidate is a {}", weather.operation.label()));
    };
    ensure!(matches!(plan.kind, JoinKind::Temporal { .. }), "not a temporal join");
    let joined = corpus.apply(query, weather).map_err(|e| e.to_string())?;
    let predicted = query.columns().len() + weather.entry.columns.len() - plan.keys.len();
    ensure!(joined.columns().len() == predicted, "{} columns, law predicts {predicted}", joined.columns().len());
    ensure!(joined.row_count() == query.row_count(), "row count changed");

    let num = |name: &str| -> Vec<f64> {
        joined.column(name).unwrap().data.as_numeric().unwrap().iter().map(|v| v.unwrap()).collect()
    };
    let (temp, precip, y) = (num("temperature"), num("precipitation"), num(demo::TARGET));
    let withheld: Vec<f64> = temp.iter().zip(&precip).map(|(t, p)| -0.8 * t + 15.0 * p).collect();
    let share = variance(&withheld) / variance(&y);
    ensure!(share >= 0.25, "withheld weather carries only {share:.3} of the target variance");

    let before = best_mae(query, &["date", "trips"])?;
    let after = best_mae(&joined, &["date", "trips", "temperature", "precipitation", "wind_speed"])?;
    let reduction = 1.0 - after / before;
    ensure!(reduction >= 0.10, "best MAE {before:.3} -> {after:.3} ({:.1}% reduction)", 100.0 * reduction);
    Ok(format!(
        "best MAE {before:.3} -> {after:.3} ({:.1}% reduction), {predicted} columns, weather variance share {share:.2}",
        100.0 * reduction
    ))
}

// ---------------------------------------------------------------- explanations

fn two_features(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x1 = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let x2 = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    (x1, x2)
}

fn frame(x1: &[f64], x2: &[f64], y: Column) -> Dataset {
    Dataset::new(
        "d",
        vec![
            Column::numeric("x1", x1.iter().copied().map(Some).collect()),
            Column::numeric("x2", x2.iter().copied().map(Some).collect()),
            y,
        ],
        Provenance::Uploaded,
    )
    .expect("columns align")
}

fn explain_spec(ds: &Dataset, task: TaskType) -> Result<ValidatedSpec, String> {
    let primary = match task {
        TaskType::Regression => Metric::Mae,
        TaskType::Classification => Metric::Accuracy,
    };
    ProblemSpec {
        task_type: task,
        target: "y".into(),
        features: vec!["x1".into(), "x2".into()],
        primary_metric: primary,
        report_metrics: Metric::for_task(task),
        eval_method: EvalMethod::Kfold { k: 5 },
        budget: Budget {
            max_pipelines: 1,
            time_limit_seconds: 10,
        },
    }
    .validate(ds)
    .map_err(|e| e.to_string())
}

fn explanation_properties() -> Check {
    let e = |e: &dyn std::fmt::Display| e.to_string();
    let (x1, x2) = two_features(200, 1);

    // (a) lasso zeroes x2 when y depends on x1 only
    let y: Vec<Option<f64>> = x1.iter().map(|a| Some(3.0 * a)).collect();
    let ds = frame(&x1, &x2, Column::numeric("y", y));
    let s = explain_spec(&ds, TaskType::Regression)?;
    let lasso = PrimitiveSpec::new(PrimitiveName::LassoRegression).with("lambda", 0.3);
    let p = Pipeline::new(vec![PrimitiveSpec::new(PrimitiveName::StandardScaler), lasso]).map_err(|x| e(&x))?;
    let fitted = fit_pipeline(&p, &ds, &s, s.usable_rows()).map_err(|x| e(&x))?;
    let flat = partial_dependence(&fitted, &ds, &s, "x2").map_err(|x| e(&x))?.values.ok_or("no values")?;
    let spread = flat.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - flat.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure!(spread <= 1e-9, "(a) pdp of zeroed feature spans {spread:e}");

    // (b) additive model
    let y: Vec<Option<f64>> = x1.iter().zip(&x2).map(|(a, b)| Some(3.0 * a - 2.0 * b + 1.0)).collect();
    let ds = frame(&x1, &x2, Column::numeric("y", y));
    let s = explain_spec(&ds, TaskType::Regression)?;
    let p = Pipeline::of(&[PrimitiveName::LinearRegression]).map_err(|x| e(&x))?;
    let fitted = fit_pipeline(&p, &ds, &s, s.usable_rows()).map_err(|x| e(&x))?;
    let curve = partial_dependence(&fitted, &ds, &s, "x1").map_err(|x| e(&x))?;
    let values = curve.values.ok_or("no values")?;
    let offset = values[0] - 3.0 * curve.grid[0];
    let worst = curve.grid.iter().zip(&values).map(|(g, v)| (v - 3.0 * g - offset).abs()).fold(0.0, f64::max);
    ensure!(worst <= 1e-6, "(b) pdp deviates from its component by {worst:e}");

    // (c) surrogate of trees of depth <= 6
    let (t1, t2) = two_features(300, 3);
    let label = |a: f64, b: f64| if a > 0.5 { "hi" } else if b > 0.0 { "mid" } else { "lo" };
    let y = t1.iter().zip(&t2).map(|(&a, &b)| Some(label(a, b).to_string())).collect();
    let ds = frame(&t1, &t2, Column::categorical("y", y));
    let s = explain_spec(&ds, TaskType::Classification)?;
    for depth in 2..=6i64 {
        let tree = PrimitiveSpec::new(PrimitiveName::DecisionTreeClassifier)
            .with("max_depth", depth)
            .with("min_leaf", 1i64);
        let p = Pipeline::new(vec![tree]).map_err(|x| e(&x))?;
        let fitted = fit_pipeline(&p, &ds, &s, s.usable_rows()).map_err(|x| e(&x))?;
        let rules = extract_rules(&fitted, &ds, &s, 64).map_err(|x| e(&x))?;
        ensure!(rules.fidelity == 1.0, "(c) depth {depth}: fidelity {}", rules.fidelity);
    }

    // (d) confusion matrix trace
    let y = x1.iter().zip(&x2).map(|(a, b)| Some(if a + 0.3 * b > 0.0 { "yes" } else { "no" }.to_string())).collect();
    let ds = frame(&x1, &x2, Column::categorical("y", y));
    let s = explain_spec(&ds, TaskType::Classification)?;
    for est in [PrimitiveName::LogisticRegression, PrimitiveName::KnnClassifier, PrimitiveName::MajorityClassBaseline] {
        let report = evaluate(&Pipeline::of(&[est]).map_err(|x| e(&x))?, &ds, &s, 8).map_err(|x| e(&x))?;
        let m = confusion_matrix(&report).map_err(|x| e(&x))?;
        let acc = report.metric(Metric::Accuracy).ok_or("no accuracy")?;
        let diff = (m.trace() as f64 / m.total() as f64 - acc).abs();
        ensure!(diff <= TOL, "(d) {est}: trace/n differs from accuracy by {diff:e}");
    }

    // (e) mean baseline scatter
    let y: Vec<Option<f64>> = x1.iter().zip(&x2).map(|(a, b)| Some(a + b)).collect();
    let ds = frame(&x1, &x2, Column::numeric("y", y));
    let s = explain_spec(&ds, TaskType::Regression)?;
    let report = evaluate(&Pipeline::of(&[PrimitiveName::MeanBaseline]).map_err(|x| e(&x))?, &ds, &s, 1).map_err(|x| e(&x))?;
    ensure!(confusion_scatter(&report).map_err(|x| e(&x))?.degenerate, "(e) mean baseline not flagged");
    Ok(format!("(a) spread {spread:.1e}, (b) max deviation {worst:.1e}, (c) fidelity 1.0 at depths 2-6, (d), (e)"))
}

// ---------------------------------------------------------------- temporal join

fn hour(day: u32, h: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2024, 5, day).unwrap().and_hms_opt(h, 0, 0).unwrap()
}

fn temporal_join_oracle() -> Check {
    // 48 crafted hourly readings over two days
    let value = |d: u32, h: u32| d as f64 * 10.0 + h as f64 * 0.25 - if h.is_multiple_of(5) { 1.5 } else { 0.0 };
    let weather = Dataset::new(
        "weather",
        vec![
            Column::temporal("time", (1..=2).flat_map(|d| (0..24).map(move |h| Some(hour(d, h)))).collect()),
            Column::numeric("temp", (1..=2).flat_map(|d| (0..24).map(move |h| Some(value(d, h)))).collect()),
        ],
        Provenance::Corpus,
    )
    .expect("columns align");
    let query = Dataset::new(
        "q",
        vec![
            Column::temporal("date", vec![Some(hour(2, 0)), Some(hour(1, 0)), Some(hour(3, 0))]),
            Column::numeric("y", vec![Some(1.0), Some(2.0), Some(3.0)]),
        ],
        Provenance::Uploaded,
    )
    .expect("columns align");
    let corpus = Corpus::from_entries(vec![entry(weather, "", &["weather"])]);
    let found = search_augmentations(&corpus, &query, "weather");
    let candidate = found.first().ok_or("no candidate")?;
    ensure!(
        matches!(&candidate.operation, Operation::Join { plan } if matches!(plan.kind, JoinKind::Temporal { granularity: Granularity::Day, .. })),
        "expected a daily temporal join"
    );
    let joined = corpus.apply(&query, candidate).map_err(|e| e.to_string())?;
    let got = joined.column("temp").ok_or("no temp column")?.data.as_numeric().unwrap().to_vec();
    let hand = |d: u32| Some((0..24).map(|h| value(d, h)).sum::<f64>() / 24.0);
    ensure!(got == vec![hand(2), hand(1), None], "means {got:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for fixture in 0..100 {
        let mut days: Vec<u32> = (0..rng.random_range(1..=20)).map(|_| rng.random_range(1..=10)).collect();
        // keeps the query at daily resolution rather than monthly
        days.push(rng.random_range(2..=10));
        let query = Dataset::new(
            "q",
            vec![
                Column::temporal("date", days.iter().map(|&d| Some(hour(d, 0))).collect()),
                Column::numeric("row", (0..days.len()).map(|i| Some(i as f64)).collect()),
            ],
            Provenance::Uploaded,
        )
        .expect("columns align");
        let mut readings: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        let mut times = Vec::new();
        let mut temps = Vec::new();
        for i in 0..rng.random_range(1..=120) {
            let (d, h) = (rng.random_range(1..=10), if i == 0 { 5 } else { rng.random_range(0..24) });
            let v = rng.random_range(-20i32..40) as f64 / 4.0;
            times.push(Some(hour(d, h)));
            temps.push(Some(v));
            readings.entry(d).or_default().push(v);
        }
        let weather = Dataset::new(
            "weather",
            vec![Column::temporal("time", times), Column::numeric("temp", temps)],
            Provenance::Corpus,
        )
        .expect("columns align");
        let corpus = Corpus::from_entries(vec![entry(weather, "", &[])]);
        let found = search_augmentations(&corpus, &query, "");
        let join = found.iter().find(|c| c.operation.label() == "temporal_join").ok_or("no join")?;
        let joined = corpus.apply(&query, join).map_err(|e| e.to_string())?;
        ensure!(joined.row_count() == query.row_count(), "fixture {fixture}: row count changed");
        ensure!(joined.columns()[..2] == *query.columns(), "fixture {fixture}: query columns or order changed");
        let ColumnData::Numeric(got) = &joined.column("temp").ok_or("no temp")?.data else {
            return Err("temp is not numeric".into());
        };
        for (i, d) in days.iter().enumerate() {
            let expected = readings.get(d).map(|v| v.iter().sum::<f64>() / v.len() as f64);
            ensure!(got[i] == expected, "fixture {fixture} row {i}: {:?} vs {expected:?}", got[i]);
        }
    }
    Ok("48-row fixture exact; 100 randomized left joins keep rows, order and group means".into())
}

// ---------------------------------------------------------------- API and CLI

fn cli_run(dir: &std::path::Path, out: &str) -> Result<Vec<u8>, String> {
    let path = |f: &str| dir.join(f).to_string_lossy().into_owned();
    let status = Command::new(env!("CARGO_BIN_EXE_curate"))
        .args(["run", "--data", &path("collisions.csv"), "--problem", &path("problem.json")])
        .args(["--corpus", &path("corpus"), "--keywords", "weather", "--out", &path(out), "--seed", "8"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(status.status.success(), "cli exited with {:?}", status.status.code());
    std::fs::read(dir.join(out).join("solutions.json")).map_err(|e| e.to_string())
}

fn api_and_cli_contract() -> Check {
    let demo_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sessions = tempfile::tempdir().map_err(|e| e.to_string())?;
    common::write_demo_dir(demo_dir.path());
    let corpus = demo_dir.path().join("corpus");
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let (scenario, identical) = runtime.block_on(async {
        let client = common::Client::open(sessions.path(), &corpus);
        let scenario = common::happy_path(&client, demo_dir.path()).await;
        let before = common::read_all(&client, &scenario).await;
        let reopened = common::Client::open(sessions.path(), &corpus);
        let after = common::read_all(&reopened, &scenario).await;
        (scenario, before == after)
    });
    ensure!(scenario.replay_matches, "cursor replay does not reconstruct the solution set");
    ensure!(identical, "payloads differ after persist and reload");
    let a = cli_run(demo_dir.path(), "out-a")?;
    let b = cli_run(demo_dir.path(), "out-b")?;
    ensure!(a == b, "solutions.json differs between same-seed runs");
    Ok(format!(
        "happy path 2xx (best MAE {:.3} -> {:.3}), replay ok, {} GET payloads identical after reload, CLI output byte-identical",
        scenario.mae_before,
        scenario.mae_after,
        scenario.reads.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "metric oracle suite", 10, metric_oracles),
        (2, "cross-validation laws", 30, cv_laws),
        (3, "search determinism and budgets", 120, search_determinism_and_budget),
        (4, "synthetic regression recovery", 120, synthetic_recovery),
        (5, "augmentation improves the model", 180, augmentation_improves_model),
        (6, "explanation properties", 60, explanation_properties),
        (7, "temporal-join oracle", 30, temporal_join_oracle),
        (8, "API and CLI contract", 180, api_and_cli_contract),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(limit) => Err(format!("over the {limit}s limit; {detail}")),
            other => other,
        };
        let (verdict, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{verdict} {id}. {name} [{:.2}s / {limit}s] {detail}", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
