use curate::evaluation::{compute_metric, EvalError};
use curate::primitives::Target;
use curate::problem::Metric;
use proptest::prelude::*;

/// Confusion-matrix route to macro precision, recall and F1.
fn macro_oracle(t: &[usize], p: &[usize], classes: usize) -> (f64, f64, f64) {
    let mut m = vec![vec![0usize; classes]; classes];
    for (&a, &b) in t.iter().zip(p) {
        m[a][b] += 1;
    }
    let present: Vec<usize> = (0..classes)
        .filter(|&c| (0..classes).any(|j| m[c][j] > 0 || m[j][c] > 0))
        .collect();
    let (mut ps, mut rs, mut fs) = (0.0, 0.0, 0.0);
    for &c in &present {
        let col: usize = (0..classes).map(|r| m[r][c]).sum();
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

fn names(v: &[usize]) -> Target {
    Target::Labels(v.iter().map(|c| format!("class{c}")).collect())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn classification_metrics_match_oracle(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..=50),
    ) {
        let t: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let p: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let (pr, rc, f1) = macro_oracle(&t, &p, 4);
        let acc = t.iter().zip(&p).filter(|(a, b)| a == b).count() as f64 / t.len() as f64;
        let (yt, yp) = (names(&t), names(&p));
        prop_assert!(close(compute_metric(Metric::Accuracy, &yt, &yp).unwrap(), acc));
        prop_assert!(close(compute_metric(Metric::Precision, &yt, &yp).unwrap(), pr));
        prop_assert!(close(compute_metric(Metric::Recall, &yt, &yp).unwrap(), rc));
        prop_assert!(close(compute_metric(Metric::F1, &yt, &yp).unwrap(), f1));
    }

    #[test]
    fn regression_metrics_match_oracle(
        pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..=50),
    ) {
        let t: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let n = t.len() as f64;
        let mut abs = 0.0;
        let mut sq = 0.0;
        for i in 0..t.len() {
            abs += (t[i] - p[i]).abs();
            sq += (t[i] - p[i]).powi(2);
        }
        let mean = t.iter().sum::<f64>() / n;
        let sst: f64 = t.iter().map(|v| (v - mean).powi(2)).sum();
        let (yt, yp) = (Target::Numeric(t.clone()), Target::Numeric(p.clone()));
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
        prop_assert!(rel(compute_metric(Metric::Mae, &yt, &yp).unwrap(), abs / n));
        prop_assert!(rel(compute_metric(Metric::Mse, &yt, &yp).unwrap(), sq / n));
        prop_assert!(rel(compute_metric(Metric::Rmse, &yt, &yp).unwrap(), (sq / n).sqrt()));
        match compute_metric(Metric::R2, &yt, &yp) {
            Ok(r2) => prop_assert!(rel(r2, 1.0 - sq / sst)),
            Err(EvalError::UndefinedMetric { .. }) => prop_assert_eq!(sst, 0.0),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}

#[test]
fn macro_f1_exhaustive_small() {
    // every pair of length-4 sequences over 3 classes
    let seqs: Vec<Vec<usize>> = (0..81).map(|mut i| (0..4).map(|_| { let c = i % 3; i /= 3; c }).collect()).collect();
    for t in &seqs {
        for p in &seqs {
            let (pr, rc, f1) = macro_oracle(t, p, 3);
            let (yt, yp) = (names(t), names(p));
            assert!(close(compute_metric(Metric::Precision, &yt, &yp).unwrap(), pr));
            assert!(close(compute_metric(Metric::Recall, &yt, &yp).unwrap(), rc));
            assert!(close(compute_metric(Metric::F1, &yt, &yp).unwrap(), f1));
        }
    }
}

#[test]
fn metric_errors() {
    let n = Target::Numeric(vec![1.0, 1.0]);
    assert!(matches!(compute_metric(Metric::R2, &n, &n), Err(EvalError::UndefinedMetric { .. })));
    assert!(matches!(
        compute_metric(Metric::Mae, &n, &Target::Numeric(vec![1.0])),
        Err(EvalError::LengthMismatch { .. })
    ));
    assert!(matches!(compute_metric(Metric::Accuracy, &n, &n), Err(EvalError::WrongTargetKind { .. })));
    let empty = Target::Numeric(vec![]);
    assert!(matches!(compute_metric(Metric::Mae, &empty, &empty), Err(EvalError::EmptyInput)));
}
