use curate::data::{Column, Dataset, Provenance};
use curate::learn::lasso::{lasso, LassoParams};
use curate::learn::linear::{least_squares, ridge};
use curate::learn::logistic::{fit_softmax, LogisticParams};
use curate::learn::tree::{ClassificationTree, RegressionTree, TreeParams};
use curate::pipeline::{fit_pipeline, Pipeline};
use curate::primitives::{PrimitiveName, Target};
use curate::problem::{Budget, EvalMethod, Metric, ProblemSpec, TaskType};
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(seed: u64, n: usize, p: usize) -> (Array2<f64>, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-5.0..5.0));
    let y = Array1::from_shape_fn(n, |_| rng.random_range(-10.0..10.0));
    (x, y)
}

fn design(x: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols() + 1, |i, j| if j == 0 { 1.0 } else { x[[i, j - 1]] })
}

#[test]
fn least_squares_matches_nalgebra() {
    for seed in 0..40 {
        let n = 20 + seed as usize;
        let p = 1 + seed as usize % 5;
        let (x, y) = random_problem(seed, n, p);
        let m = least_squares(x.view(), y.view()).unwrap();
        let oracle = design(&x)
            .svd(true, true)
            .solve(&DVector::from_vec(y.to_vec()), 1e-14)
            .unwrap();
        assert!((m.intercept - oracle[0]).abs() < 1e-6);
        for j in 0..p {
            assert!((m.coefficients[j] - oracle[j + 1]).abs() < 1e-6, "seed {seed}");
        }
    }
}

#[test]
fn noiseless_linear_recovery() {
    let (x, _) = random_problem(3, 50, 3);
    let y = x.rows().into_iter().map(|r| 1.5 + 3.0 * r[0] - 2.0 * r[1] + 0.5 * r[2]).collect::<Array1<f64>>();
    let m = least_squares(x.view(), y.view()).unwrap();
    for (got, want) in m.coefficients.iter().zip([3.0, -2.0, 0.5]) {
        assert!((got - want).abs() < 1e-9);
    }
    assert!((m.intercept - 1.5).abs() < 1e-9);
}

#[test]
fn ridge_matches_normal_equations() {
    let (x, y) = random_problem(5, 40, 4);
    let lambda = 0.3;
    let m = ridge(x.view(), y.view(), lambda).unwrap();
    let n = x.nrows() as f64;
    let xm = DMatrix::from_fn(40, 4, |i, j| x[[i, j]]);
    let means = DVector::from_fn(4, |j, _| xm.column(j).mean());
    let xc = DMatrix::from_fn(40, 4, |i, j| xm[(i, j)] - means[j]);
    let y_mean = y.mean().unwrap();
    let yc = DVector::from_fn(40, |i, _| y[i] - y_mean);
    let lhs = xc.transpose() * &xc / n + DMatrix::identity(4, 4) * lambda;
    let b = lhs.lu().solve(&(xc.transpose() * yc / n)).unwrap();
    for j in 0..4 {
        assert!((m.coefficients[j] - b[j]).abs() < 1e-9);
    }
    assert!((m.intercept - (y_mean - b.dot(&means))).abs() < 1e-9);
}

#[test]
fn lasso_satisfies_kkt() {
    let (x, y) = random_problem(8, 60, 5);
    for lambda in [0.01, 0.3, 1.0, 100.0] {
        let fit = lasso(x.view(), y.view(), &LassoParams::new(lambda)).unwrap();
        assert!(fit.converged);
        let pred = fit.model.predict(x.view());
        let r = &y - &pred;
        let n = x.nrows() as f64;
        for (j, &b) in fit.model.coefficients.iter().enumerate() {
            let g = x.column(j).dot(&r) / n;
            if b == 0.0 {
                assert!(g.abs() <= lambda + 1e-4, "lambda {lambda} j {j} g {g}");
            } else {
                assert!((g - lambda * b.signum()).abs() <= 1e-4, "lambda {lambda} j {j} g {g}");
            }
        }
        if lambda == 100.0 {
            assert!(fit.model.coefficients.iter().all(|&b| b == 0.0));
        }
    }
}

#[test]
fn softmax_loss_decreases() {
    let (x, _) = random_problem(2, 80, 2);
    let labels: Vec<usize> = x.rows().into_iter().map(|r| usize::from(r[0] + r[1] > 0.0)).collect();
    let fit = fit_softmax(x.view(), &labels, 2, &LogisticParams::new(0.01)).unwrap();
    assert!(fit.losses.last().unwrap() < fit.losses.first().unwrap());
    let acc = fit.model.predict(x.view()).iter().zip(&labels).filter(|(a, b)| a == b).count();
    assert!(acc >= 76);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_respects_depth_and_leaf_size(
        seed in 0u64..1000,
        n in 1usize..80,
        max_depth in 1usize..8,
        min_leaf in 1usize..10,
    ) {
        let (x, y) = random_problem(seed, n, 3);
        let params = TreeParams { max_depth, min_leaf };
        let tree = RegressionTree::fit(x.view(), y.view(), params).unwrap();
        prop_assert!(tree.root.depth() <= max_depth);
        prop_assert_eq!(tree.root.samples(), n);
        let leaves = tree.root.leaves();
        prop_assert_eq!(leaves.iter().map(|l| l.1).sum::<usize>(), n);
        if leaves.len() > 1 {
            prop_assert!(leaves.iter().all(|l| l.1 >= min_leaf));
        }
        let labels: Vec<usize> = y.iter().map(|v| usize::from(*v > 0.0)).collect();
        let ct = ClassificationTree::fit(x.view(), &labels, 2, params).unwrap();
        prop_assert!(ct.root.depth() <= max_depth);
    }

    #[test]
    fn pipeline_fit_ignores_row_order(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 30;
        let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x2: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..n).map(|i| 3.0 * x1[i] - 2.0 * x2[i] + rng.random_range(-0.1..0.1)).collect();
        let ds = Dataset::new(
            "d",
            vec![
                Column::numeric("x1", x1.into_iter().map(Some).collect()),
                Column::numeric("x2", x2.into_iter().map(Some).collect()),
                Column::numeric("y", y.into_iter().map(Some).collect()),
            ],
            Provenance::Uploaded,
        ).unwrap();
        let spec = ProblemSpec {
            task_type: TaskType::Regression,
            target: "y".into(),
            features: vec!["x1".into(), "x2".into()],
            primary_metric: Metric::Mae,
            report_metrics: vec![Metric::Mae],
            eval_method: EvalMethod::Kfold { k: 3 },
            budget: Budget { max_pipelines: 1, time_limit_seconds: 1 },
        }.validate(&ds).unwrap();
        let rows: Vec<usize> = (0..n).collect();
        let mut shuffled = rows.clone();
        shuffled.reverse();
        shuffled.swap(0, (seed % n as u64) as usize);
        for est in [PrimitiveName::LinearRegression, PrimitiveName::DecisionTreeRegressor, PrimitiveName::KnnRegressor] {
            let p = Pipeline::of(&[PrimitiveName::StandardScaler, est]).unwrap();
            let a = fit_pipeline(&p, &ds, &spec, &rows).unwrap().predict_rows(&ds, &rows).unwrap();
            let b = fit_pipeline(&p, &ds, &spec, &shuffled).unwrap().predict_rows(&ds, &rows).unwrap();
            let (Target::Numeric(a), Target::Numeric(b)) = (a, b) else { panic!() };
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((u - v).abs() < 1e-9, "{:?}: {} vs {}", est, u, v);
            }
        }
    }
}
