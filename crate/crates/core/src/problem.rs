//! Problem specifications: what to predict, from which columns, how to score
//! it and how much search to spend.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use thiserror::Error;

use crate::data::{ColumnData, Dataset, Dtype};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    Classification,
    Regression,
}

impl TaskType {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::Classification => "classification",
            TaskType::Regression => "regression",
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Precision,
    Recall,
    F1,
    Mae,
    Mse,
    Rmse,
    R2,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Accuracy,
        Metric::Precision,
        Metric::Recall,
        Metric::F1,
        Metric::Mae,
        Metric::Mse,
        Metric::Rmse,
        Metric::R2,
    ];

    pub fn task(self) -> TaskType {
        match self {
            Metric::Accuracy | Metric::Precision | Metric::Recall | Metric::F1 => {
                TaskType::Classification
            }
            Metric::Mae | Metric::Mse | Metric::Rmse | Metric::R2 => TaskType::Regression,
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Mae | Metric::Mse | Metric::Rmse)
    }

    pub fn for_task(task: TaskType) -> Vec<Metric> {
        Metric::ALL.into_iter().filter(|m| m.task() == task).collect()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
            Metric::Mae => "mae",
            Metric::Mse => "mse",
            Metric::Rmse => "rmse",
            Metric::R2 => "r2",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvalMethod {
    Kfold { k: usize },
    Holdout { test_fraction: f64 },
}

impl Default for EvalMethod {
    fn default() -> Self {
        EvalMethod::Kfold { k: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_pipelines: usize,
    pub time_limit_seconds: u64,
}

/// A user's prediction problem, independent of any particular dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Json")]
pub struct ProblemSpec {
    pub task_type: TaskType,
    pub target: String,
    pub features: Vec<String>,
    pub primary_metric: Metric,
    pub report_metrics: Vec<Metric>,
    pub eval_method: EvalMethod,
    pub budget: Budget,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported task type {0:?}")]
    UnsupportedTaskType(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("target column {0:?} not found")]
    TargetNotFound(String),
    #[error("feature column {0:?} not found")]
    FeatureNotFound(String),
    #[error("target {0:?} is also listed as a feature")]
    TargetInFeatures(String),
    #[error("feature {0:?} listed more than once")]
    DuplicateFeature(String),
    #[error("{task} needs a {expected} target but {target:?} is {found}")]
    TaskTargetMismatch {
        task: TaskType,
        target: String,
        expected: Dtype,
        found: Dtype,
    },
    #[error("metric {metric} does not apply to {task}")]
    MetricTaskMismatch { metric: Metric, task: TaskType },
    #[error("primary metric {0} is not among the reported metrics")]
    PrimaryMetricNotReported(Metric),
    #[error("no features selected")]
    EmptyFeatures,
    #[error("feature {feature:?} has unsupported type {dtype}")]
    UnsupportedFeatureType { feature: String, dtype: Dtype },
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    #[error("invalid evaluation method: {0}")]
    InvalidEvalMethod(String),
    #[error("no rows with a present target value")]
    NoUsableRows,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> SpecError {
    SpecError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

const UNSUPPORTED_TASKS: &[&str] = &[
    "clustering",
    "time_series_forecasting",
    "timeseries_forecasting",
    "forecasting",
];

fn field<'a>(obj: &'a Map<String, Json>, path: &str, key: &str) -> Result<&'a Json, SpecError> {
    obj.get(key)
        .ok_or_else(|| schema(format!("{path}.{key}"), "missing required field"))
}

fn as_str<'a>(v: &'a Json, path: &str) -> Result<&'a str, SpecError> {
    v.as_str().ok_or_else(|| schema(path, "expected a string"))
}

fn as_object<'a>(v: &'a Json, path: &str) -> Result<&'a Map<String, Json>, SpecError> {
    v.as_object().ok_or_else(|| schema(path, "expected an object"))
}

fn as_positive_int(v: &Json, path: &str) -> Result<u64, SpecError> {
    match v.as_u64() {
        Some(n) if n > 0 => Ok(n),
        _ => Err(schema(path, "expected a positive integer")),
    }
}

fn reject_unknown(obj: &Map<String, Json>, path: &str, known: &[&str]) -> Result<(), SpecError> {
    match obj.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(schema(format!("{path}.{k}"), "unknown field")),
        None => Ok(()),
    }
}

fn parse_metric(v: &Json, path: &str) -> Result<Metric, SpecError> {
    as_str(v, path)?.parse().map_err(|e: String| schema(path, e))
}

impl ProblemSpec {
    /// Parses the JSON form. Errors carry a JSON path such as `$.budget.max_pipelines`.
    pub fn parse(text: &str) -> Result<ProblemSpec, SpecError> {
        let json: Json = serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
        ProblemSpec::from_json(&json)
    }

    pub fn from_json(json: &Json) -> Result<ProblemSpec, SpecError> {
        let root = as_object(json, "$")?;
        reject_unknown(
            root,
            "$",
            &[
                "task_type",
                "target",
                "features",
                "primary_metric",
                "report_metrics",
                "eval_method",
                "budget",
            ],
        )?;

        let task_raw = as_str(field(root, "$", "task_type")?, "$.task_type")?;
        let task_type = match task_raw {
            "classification" => TaskType::Classification,
            "regression" => TaskType::Regression,
            t if UNSUPPORTED_TASKS.contains(&t) => {
                return Err(SpecError::UnsupportedTaskType(t.to_string()))
            }
            t => return Err(schema("$.task_type", format!("unknown task type {t:?}"))),
        };

        let target = as_str(field(root, "$", "target")?, "$.target")?.to_string();

        let features = field(root, "$", "features")?
            .as_array()
            .ok_or_else(|| schema("$.features", "expected an array"))?
            .iter()
            .enumerate()
            .map(|(i, f)| as_str(f, &format!("$.features[{i}]")).map(str::to_string))
            .collect::<Result<Vec<_>, _>>()?;

        let primary_metric = parse_metric(field(root, "$", "primary_metric")?, "$.primary_metric")?;

        let report_metrics = match root.get("report_metrics") {
            None | Some(Json::Null) => Metric::for_task(task_type),
            Some(v) => v
                .as_array()
                .ok_or_else(|| schema("$.report_metrics", "expected an array"))?
                .iter()
                .enumerate()
                .map(|(i, m)| parse_metric(m, &format!("$.report_metrics[{i}]")))
                .collect::<Result<Vec<_>, _>>()?,
        };

        let eval_method = match root.get("eval_method") {
            None | Some(Json::Null) => EvalMethod::default(),
            Some(v) => {
                let obj = as_object(v, "$.eval_method")?;
                let kind = as_str(field(obj, "$.eval_method", "kind")?, "$.eval_method.kind")?;
                match kind {
                    "kfold" => {
                        reject_unknown(obj, "$.eval_method", &["kind", "k"])?;
                        let k = field(obj, "$.eval_method", "k")?
                            .as_u64()
                            .filter(|&k| k >= 2)
                            .ok_or_else(|| schema("$.eval_method.k", "expected an integer >= 2"))?;
                        EvalMethod::Kfold { k: k as usize }
                    }
                    "holdout" => {
                        reject_unknown(obj, "$.eval_method", &["kind", "test_fraction"])?;
                        let f = field(obj, "$.eval_method", "test_fraction")?
                            .as_f64()
                            .filter(|f| *f > 0.0 && *f < 1.0)
                            .ok_or_else(|| {
                                schema("$.eval_method.test_fraction", "expected a number in (0, 1)")
                            })?;
                        EvalMethod::Holdout { test_fraction: f }
                    }
                    other => {
                        return Err(schema(
                            "$.eval_method.kind",
                            format!("unknown evaluation method {other:?}"),
                        ))
                    }
                }
            }
        };

        let budget_obj = as_object(field(root, "$", "budget")?, "$.budget")?;
        reject_unknown(budget_obj, "$.budget", &["max_pipelines", "time_limit_seconds"])?;
        let budget = Budget {
            max_pipelines: as_positive_int(
                field(budget_obj, "$.budget", "max_pipelines")?,
                "$.budget.max_pipelines",
            )? as usize,
            time_limit_seconds: as_positive_int(
                field(budget_obj, "$.budget", "time_limit_seconds")?,
                "$.budget.time_limit_seconds",
            )?,
        };

        Ok(ProblemSpec {
            task_type,
            target,
            features,
            primary_metric,
            report_metrics,
            eval_method,
            budget,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// Checks the spec against `dataset` and records which rows are usable.
    pub fn validate(&self, dataset: &Dataset) -> Result<ValidatedSpec, ValidationError> {
        let target = dataset
            .column(&self.target)
            .ok_or_else(|| ValidationError::TargetNotFound(self.target.clone()))?;
        if self.features.is_empty() {
            return Err(ValidationError::EmptyFeatures);
        }
        let mut seen = BTreeSet::new();
        for f in &self.features {
            if f == &self.target {
                return Err(ValidationError::TargetInFeatures(f.clone()));
            }
            if !seen.insert(f.as_str()) {
                return Err(ValidationError::DuplicateFeature(f.clone()));
            }
            let col = dataset
                .column(f)
                .ok_or_else(|| ValidationError::FeatureNotFound(f.clone()))?;
            if col.dtype() == Dtype::Text {
                return Err(ValidationError::UnsupportedFeatureType {
                    feature: f.clone(),
                    dtype: Dtype::Text,
                });
            }
        }
        let expected = match self.task_type {
            TaskType::Classification => Dtype::Categorical,
            TaskType::Regression => Dtype::Numeric,
        };
        if target.dtype() != expected {
            return Err(ValidationError::TaskTargetMismatch {
                task: self.task_type,
                target: self.target.clone(),
                expected,
                found: target.dtype(),
            });
        }
        for &metric in std::iter::once(&self.primary_metric).chain(&self.report_metrics) {
            if metric.task() != self.task_type {
                return Err(ValidationError::MetricTaskMismatch {
                    metric,
                    task: self.task_type,
                });
            }
        }
        if !self.report_metrics.contains(&self.primary_metric) {
            return Err(ValidationError::PrimaryMetricNotReported(self.primary_metric));
        }
        if self.budget.max_pipelines == 0 || self.budget.time_limit_seconds == 0 {
            return Err(ValidationError::InvalidBudget(
                "max_pipelines and time_limit_seconds must be positive".into(),
            ));
        }
        match self.eval_method {
            EvalMethod::Kfold { k } if k < 2 => {
                return Err(ValidationError::InvalidEvalMethod(format!("k = {k} < 2")))
            }
            EvalMethod::Holdout { test_fraction } if !(test_fraction > 0.0 && test_fraction < 1.0) => {
                return Err(ValidationError::InvalidEvalMethod(format!(
                    "test_fraction {test_fraction} outside (0, 1)"
                )))
            }
            _ => {}
        }

        let (usable_rows, excluded_rows): (Vec<usize>, Vec<usize>) =
            (0..dataset.row_count()).partition(|&r| !target.data.is_missing(r));
        if usable_rows.is_empty() {
            return Err(ValidationError::NoUsableRows);
        }
        debug_assert!(matches!(
            (&target.data, self.task_type),
            (ColumnData::Numeric(_), TaskType::Regression)
                | (ColumnData::Categorical(_), TaskType::Classification)
        ));
        Ok(ValidatedSpec {
            spec: self.clone(),
            dataset_name: dataset.name().to_string(),
            dataset_fingerprint: dataset.fingerprint(),
            usable_rows,
            excluded_rows,
        })
    }
}

impl TryFrom<Json> for ProblemSpec {
    type Error = SpecError;

    fn try_from(value: Json) -> Result<Self, Self::Error> {
        ProblemSpec::from_json(&value)
    }
}

/// A spec checked against a specific dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedSpec {
    spec: ProblemSpec,
    dataset_name: String,
    dataset_fingerprint: String,
    usable_rows: Vec<usize>,
    excluded_rows: Vec<usize>,
}

impl ValidatedSpec {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn task_type(&self) -> TaskType {
        self.spec.task_type
    }

    pub fn target(&self) -> &str {
        &self.spec.target
    }

    pub fn features(&self) -> &[String] {
        &self.spec.features
    }

    pub fn dataset_name(&self) -> &str {
        &self.dataset_name
    }

    pub fn dataset_fingerprint(&self) -> &str {
        &self.dataset_fingerprint
    }

    /// Rows with a present target, ascending.
    pub fn usable_rows(&self) -> &[usize] {
        &self.usable_rows
    }

    /// Rows dropped because their target is missing.
    pub fn excluded_rows(&self) -> &[usize] {
        &self.excluded_rows
    }

    pub fn is_bound_to(&self, dataset: &Dataset) -> bool {
        self.dataset_fingerprint == dataset.fingerprint()
    }

    /// Re-validates the underlying spec; a no-op for an unchanged dataset.
    pub fn revalidate(&self, dataset: &Dataset) -> Result<ValidatedSpec, ValidationError> {
        self.spec.validate(dataset)
    }
}

impl Deref for ValidatedSpec {
    type Target = ProblemSpec;

    fn deref(&self) -> &ProblemSpec {
        &self.spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, Provenance};
    use proptest::prelude::*;

    fn dataset() -> Dataset {
        Dataset::new(
            "collisions",
            vec![
                Column::numeric("collisions", vec![Some(3.0), None, Some(5.0)]),
                Column::numeric("trips", vec![Some(1.0), Some(2.0), Some(3.0)]),
                Column::temporal(
                    "date",
                    ["2019-01-01", "2019-01-02", "2019-01-03"]
                        .iter()
                        .map(|s| crate::data::temporal::parse_timestamp(s))
                        .collect(),
                ),
                Column::categorical("borough", vec![Some("a".into()), Some("b".into()), Some("a".into())]),
                Column::new("note", ColumnData::Text(vec![Some("x".into()), None, None])),
            ],
            Provenance::Uploaded,
        )
        .unwrap()
    }

    fn regression() -> ProblemSpec {
        ProblemSpec {
            task_type: TaskType::Regression,
            target: "collisions".into(),
            features: vec!["trips".into(), "date".into()],
            primary_metric: Metric::Mae,
            report_metrics: Metric::for_task(TaskType::Regression),
            eval_method: EvalMethod::default(),
            budget: Budget {
                max_pipelines: 10,
                time_limit_seconds: 60,
            },
        }
    }

    #[test]
    fn valid_regression_spec() {
        let v = regression().validate(&dataset()).unwrap();
        assert_eq!(v.usable_rows(), &[0, 2]);
        assert_eq!(v.excluded_rows(), &[1]);
    }

    #[test]
    fn validate_is_idempotent() {
        let d = dataset();
        let v = regression().validate(&d).unwrap();
        assert_eq!(v.revalidate(&d).unwrap(), v);
        assert!(v.is_bound_to(&d));
    }

    #[test]
    fn every_validation_error_is_reachable() {
        let d = dataset();
        let check = |f: &dyn Fn(&mut ProblemSpec), expect: &dyn Fn(&ValidationError) -> bool| {
            let mut s = regression();
            f(&mut s);
            let err = s.validate(&d).unwrap_err();
            assert!(expect(&err), "unexpected {err:?}");
        };
        check(&|s| s.target = "nope".into(), &|e| matches!(e, ValidationError::TargetNotFound(_)));
        check(&|s| s.features.push("nope".into()), &|e| {
            matches!(e, ValidationError::FeatureNotFound(n) if n == "nope")
        });
        check(&|s| s.features.push("collisions".into()), &|e| {
            matches!(e, ValidationError::TargetInFeatures(_))
        });
        check(&|s| s.features.push("trips".into()), &|e| {
            matches!(e, ValidationError::DuplicateFeature(_))
        });
        check(&|s| s.target = "borough".into(), &|e| {
            matches!(e, ValidationError::TaskTargetMismatch { .. })
        });
        check(
            &|s| {
                s.task_type = TaskType::Classification;
                s.target = "borough".into();
            },
            &|e| matches!(e, ValidationError::MetricTaskMismatch { metric: Metric::Mae, .. }),
        );
        check(&|s| s.report_metrics = vec![Metric::Rmse], &|e| {
            matches!(e, ValidationError::PrimaryMetricNotReported(Metric::Mae))
        });
        check(&|s| s.features.clear(), &|e| matches!(e, ValidationError::EmptyFeatures));
        check(&|s| s.features.push("note".into()), &|e| {
            matches!(e, ValidationError::UnsupportedFeatureType { .. })
        });
        check(&|s| s.budget.max_pipelines = 0, &|e| matches!(e, ValidationError::InvalidBudget(_)));
        check(&|s| s.eval_method = EvalMethod::Kfold { k: 1 }, &|e| {
            matches!(e, ValidationError::InvalidEvalMethod(_))
        });
        let all_missing = Dataset::new(
            "d",
            vec![
                Column::numeric("y", vec![None, None]),
                Column::numeric("x", vec![Some(1.0), Some(2.0)]),
            ],
            Provenance::Uploaded,
        )
        .unwrap();
        let mut s = regression();
        s.target = "y".into();
        s.features = vec!["x".into()];
        assert_eq!(s.validate(&all_missing).unwrap_err(), ValidationError::NoUsableRows);
    }

    #[test]
    fn parse_defaults() {
        let s = ProblemSpec::parse(
            r#"{"task_type":"regression","target":"y","features":["x"],"primary_metric":"mae",
                "budget":{"max_pipelines":5,"time_limit_seconds":10}}"#,
        )
        .unwrap();
        assert_eq!(s.eval_method, EvalMethod::Kfold { k: 5 });
        assert_eq!(s.report_metrics, vec![Metric::Mae, Metric::Mse, Metric::Rmse, Metric::R2]);
    }

    #[test]
    fn parse_errors_carry_paths() {
        let err = ProblemSpec::parse(
            r#"{"task_type":"regression","features":["x"],"primary_metric":"mae",
                "budget":{"max_pipelines":5,"time_limit_seconds":10}}"#,
        )
        .unwrap_err();
        assert!(matches!(&err, SpecError::Schema { path, .. } if path == "$.target"), "{err:?}");

        let err = ProblemSpec::parse(
            r#"{"task_type":"regression","target":"y","features":["x"],"primary_metric":"mae",
                "budget":{"max_pipelines":0,"time_limit_seconds":10}}"#,
        )
        .unwrap_err();
        assert!(
            matches!(&err, SpecError::Schema { path, .. } if path == "$.budget.max_pipelines"),
            "{err:?}"
        );

        let err = ProblemSpec::parse(
            r#"{"task_type":"clustering","target":"y","features":["x"],"primary_metric":"mae",
                "budget":{"max_pipelines":1,"time_limit_seconds":10}}"#,
        )
        .unwrap_err();
        assert_eq!(err, SpecError::UnsupportedTaskType("clustering".into()));

        let err = ProblemSpec::parse(
            r#"{"task_type":"regression","target":"y","features":["x", 3],"primary_metric":"mae",
                "budget":{"max_pipelines":1,"time_limit_seconds":10}}"#,
        )
        .unwrap_err();
        assert!(matches!(&err, SpecError::Schema { path, .. } if path == "$.features[1]"));
    }

    fn arb_spec() -> impl Strategy<Value = ProblemSpec> {
        let metric = prop::sample::select(Metric::ALL.to_vec());
        (
            prop::bool::ANY,
            "[a-z]{1,8}",
            prop::collection::vec("[a-z_]{1,8}", 0..5),
            metric,
            prop::collection::vec(prop::sample::select(Metric::ALL.to_vec()), 0..4),
            prop_oneof![
                (2usize..20).prop_map(|k| EvalMethod::Kfold { k }),
                (0.01f64..0.99).prop_map(|f| EvalMethod::Holdout { test_fraction: f }),
            ],
            1usize..1000,
            1u64..10_000,
        )
            .prop_map(|(cls, target, features, primary, report, eval, mp, tl)| ProblemSpec {
                task_type: if cls { TaskType::Classification } else { TaskType::Regression },
                target,
                features,
                primary_metric: primary,
                report_metrics: report,
                eval_method: eval,
                budget: Budget {
                    max_pipelines: mp,
                    time_limit_seconds: tl,
                },
            })
    }

    proptest! {
        #[test]
        fn json_round_trip(spec in arb_spec()) {
            let back = ProblemSpec::parse(&spec.to_json()).unwrap();
            prop_assert_eq!(back, spec.clone());
            let via_serde: ProblemSpec = serde_json::from_str(&spec.to_json()).unwrap();
            prop_assert_eq!(via_serde, spec);
        }
    }
}
