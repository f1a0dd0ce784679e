//! The catalog of preprocessing and learning primitives that pipelines are
//! built from.

mod fitted;
mod table;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learn::LearnError;
use crate::problem::TaskType;

pub use fitted::{fit, FittedPrimitive, LearnedState, ScaleParams};
pub use table::{FeatureColumn, FeatureData, FeatureField, FeatureKind, FeatureTable, Predictions, Target};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrimitiveError {
    #[error("unknown primitive '{0}'")]
    UnknownPrimitive(String),
    #[error("{primitive}: invalid hyperparameter '{name}': {message}")]
    InvalidHyperparameter {
        primitive: String,
        name: String,
        message: String,
    },
    #[error("{primitive} requires numeric input but column '{column}' is not numeric")]
    NonNumericInput { primitive: String, column: String },
    #[error("{primitive} cannot handle missing values in column '{column}'")]
    MissingValues { primitive: String, column: String },
    #[error("{0} requires a target")]
    MissingTarget(String),
    #[error("{primitive} expects a {expected} target")]
    TargetKind { primitive: String, expected: String },
    #[error("input schema does not match fit-time schema (missing: {missing:?}, extra: {extra:?})")]
    SchemaMismatch { missing: Vec<String>, extra: Vec<String> },
    #[error("{0} is not an estimator")]
    NotAnEstimator(String),
    #[error("{0} is not a preprocessor")]
    NotAPreprocessor(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveName {
    MeanImputer,
    ConstantImputer,
    StandardScaler,
    MinmaxScaler,
    OneHotEncoder,
    DatetimeExpander,
    LinearRegression,
    RidgeRegression,
    LassoRegression,
    DecisionTreeRegressor,
    KnnRegressor,
    LogisticRegression,
    DecisionTreeClassifier,
    KnnClassifier,
    MajorityClassBaseline,
    MeanBaseline,
}

impl PrimitiveName {
    pub const ALL: [PrimitiveName; 16] = [
        PrimitiveName::MeanImputer,
        PrimitiveName::ConstantImputer,
        PrimitiveName::StandardScaler,
        PrimitiveName::MinmaxScaler,
        PrimitiveName::OneHotEncoder,
        PrimitiveName::DatetimeExpander,
        PrimitiveName::LinearRegression,
        PrimitiveName::RidgeRegression,
        PrimitiveName::LassoRegression,
        PrimitiveName::DecisionTreeRegressor,
        PrimitiveName::KnnRegressor,
        PrimitiveName::LogisticRegression,
        PrimitiveName::DecisionTreeClassifier,
        PrimitiveName::KnnClassifier,
        PrimitiveName::MajorityClassBaseline,
        PrimitiveName::MeanBaseline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PrimitiveName::MeanImputer => "mean_imputer",
            PrimitiveName::ConstantImputer => "constant_imputer",
            PrimitiveName::StandardScaler => "standard_scaler",
            PrimitiveName::MinmaxScaler => "minmax_scaler",
            PrimitiveName::OneHotEncoder => "one_hot_encoder",
            PrimitiveName::DatetimeExpander => "datetime_expander",
            PrimitiveName::LinearRegression => "linear_regression",
            PrimitiveName::RidgeRegression => "ridge_regression",
            PrimitiveName::LassoRegression => "lasso_regression",
            PrimitiveName::DecisionTreeRegressor => "decision_tree_regressor",
            PrimitiveName::KnnRegressor => "knn_regressor",
            PrimitiveName::LogisticRegression => "logistic_regression",
            PrimitiveName::DecisionTreeClassifier => "decision_tree_classifier",
            PrimitiveName::KnnClassifier => "knn_classifier",
            PrimitiveName::MajorityClassBaseline => "majority_class_baseline",
            PrimitiveName::MeanBaseline => "mean_baseline",
        }
    }

    pub fn role(self) -> Role {
        use PrimitiveName::*;
        match self {
            MeanImputer | ConstantImputer | StandardScaler | MinmaxScaler | OneHotEncoder | DatetimeExpander => {
                Role::Preprocessor
            }
            _ => Role::Estimator,
        }
    }

    pub fn is_estimator(self) -> bool {
        self.role() == Role::Estimator
    }

    /// Tasks an estimator supports; preprocessors support both.
    pub fn tasks(self) -> &'static [TaskType] {
        use PrimitiveName::*;
        match self {
            LinearRegression | RidgeRegression | LassoRegression | DecisionTreeRegressor | KnnRegressor
            | MeanBaseline => &[TaskType::Regression],
            LogisticRegression | DecisionTreeClassifier | KnnClassifier | MajorityClassBaseline => {
                &[TaskType::Classification]
            }
            _ => &[TaskType::Classification, TaskType::Regression],
        }
    }

    pub fn supports(self, task: TaskType) -> bool {
        self.tasks().contains(&task)
    }
}

impl fmt::Display for PrimitiveName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PrimitiveName {
    type Err = PrimitiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PrimitiveName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| PrimitiveError::UnknownPrimitive(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Preprocessor,
    Estimator,
}

/// A hyperparameter value. Integers and reals stay distinct on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Int(i64),
    Real(f64),
}

impl HyperValue {
    pub fn as_f64(self) -> f64 {
        match self {
            HyperValue::Int(i) => i as f64,
            HyperValue::Real(r) => r,
        }
    }
}

impl From<i64> for HyperValue {
    fn from(v: i64) -> Self {
        HyperValue::Int(v)
    }
}

impl From<f64> for HyperValue {
    fn from(v: f64) -> Self {
        HyperValue::Real(v)
    }
}

impl fmt::Display for HyperValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperValue::Int(i) => write!(f, "{i}"),
            HyperValue::Real(r) => write!(f, "{r}"),
        }
    }
}

/// Grid used for every λ hyperparameter: [1e-4, 10] on a 1-3 log ladder.
pub const LAMBDA_GRID: [f64; 11] = [1e-4, 3e-4, 1e-3, 3e-3, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0];
pub const MAX_DEPTH_CHOICES: [i64; 9] = [2, 3, 4, 5, 6, 7, 8, 9, 10];
pub const MIN_LEAF_CHOICES: [i64; 3] = [1, 5, 20];
pub const K_CHOICES: [i64; 5] = [1, 3, 5, 11, 25];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HyperRange {
    /// Any real in `[min, max]`; searched on `grid`.
    LogReal { min: f64, max: f64, grid: Vec<f64> },
    IntChoice { choices: Vec<i64> },
    /// Unbounded real, not searched.
    Real,
}

impl HyperRange {
    fn check(&self, v: HyperValue) -> Result<HyperValue, String> {
        match self {
            HyperRange::LogReal { min, max, .. } => {
                let x = v.as_f64();
                if x.is_finite() && x >= *min && x <= *max {
                    Ok(HyperValue::Real(x))
                } else {
                    Err(format!("{x} outside [{min}, {max}]"))
                }
            }
            HyperRange::IntChoice { choices } => match v {
                HyperValue::Int(i) if choices.contains(&i) => Ok(v),
                HyperValue::Real(r) if r.fract() == 0.0 && choices.contains(&(r as i64)) => {
                    Ok(HyperValue::Int(r as i64))
                }
                _ => Err(format!("{v} not one of {choices:?}")),
            },
            HyperRange::Real => {
                let x = v.as_f64();
                if x.is_finite() {
                    Ok(HyperValue::Real(x))
                } else {
                    Err("must be finite".into())
                }
            }
        }
    }

    /// Values the search enumerates.
    pub fn grid(&self) -> Vec<HyperValue> {
        match self {
            HyperRange::LogReal { grid, .. } => grid.iter().map(|&g| HyperValue::Real(g)).collect(),
            HyperRange::IntChoice { choices } => choices.iter().map(|&c| HyperValue::Int(c)).collect(),
            HyperRange::Real => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparamDescriptor {
    pub name: String,
    pub range: HyperRange,
    pub default: HyperValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveDescriptor {
    pub name: PrimitiveName,
    pub role: Role,
    pub tasks: Vec<TaskType>,
    /// Column kinds the primitive consumes; other kinds pass through untouched
    /// (preprocessors) or are rejected (estimators).
    pub input_kinds: Vec<FeatureKind>,
    /// Output columns produced per consumed input column.
    pub outputs_per_input: Option<usize>,
    pub hyperparams: Vec<HyperparamDescriptor>,
    pub description: String,
}

fn lambda(default: f64) -> HyperparamDescriptor {
    HyperparamDescriptor {
        name: "lambda".into(),
        range: HyperRange::LogReal {
            min: 1e-4,
            max: 10.0,
            grid: LAMBDA_GRID.to_vec(),
        },
        default: HyperValue::Real(default),
    }
}

fn int_choice(name: &str, choices: &[i64], default: i64) -> HyperparamDescriptor {
    HyperparamDescriptor {
        name: name.into(),
        range: HyperRange::IntChoice {
            choices: choices.to_vec(),
        },
        default: HyperValue::Int(default),
    }
}

pub fn descriptor(name: PrimitiveName) -> PrimitiveDescriptor {
    use FeatureKind::*;
    use PrimitiveName::*;
    let tree = || {
        vec![
            int_choice("max_depth", &MAX_DEPTH_CHOICES, 5),
            int_choice("min_leaf", &MIN_LEAF_CHOICES, 5),
        ]
    };
    let (input_kinds, outputs_per_input, hyperparams, description): (Vec<FeatureKind>, Option<usize>, _, &str) =
        match name {
            MeanImputer => (
                vec![Numeric, Temporal],
                Some(1),
                vec![],
                "fills missing cells with the fit-time column mean",
            ),
            ConstantImputer => (
                vec![Numeric, Temporal],
                Some(1),
                vec![HyperparamDescriptor {
                    name: "value".into(),
                    range: HyperRange::Real,
                    default: HyperValue::Real(0.0),
                }],
                "fills missing numeric cells with a constant and missing timestamps with the earliest fit-time timestamp",
            ),
            StandardScaler => (vec![Numeric], Some(1), vec![], "centers to zero mean and unit population std"),
            MinmaxScaler => (vec![Numeric], Some(1), vec![], "rescales to [0, 1] using fit-time min and max"),
            OneHotEncoder => (
                vec![Categorical],
                None,
                vec![],
                "one 0/1 column per fit-time category; unseen categories map to all zeros",
            ),
            DatetimeExpander => (
                vec![Temporal],
                Some(4),
                vec![],
                "expands a timestamp into year, month, day and weekday columns",
            ),
            LinearRegression => (vec![Numeric], None, vec![], "ordinary least squares"),
            RidgeRegression => (vec![Numeric], None, vec![lambda(1.0)], "L2-penalized least squares"),
            LassoRegression => (
                vec![Numeric],
                None,
                vec![lambda(0.01)],
                "L1-penalized least squares by coordinate descent",
            ),
            DecisionTreeRegressor => (vec![Numeric], None, tree(), "CART regression tree (variance reduction)"),
            KnnRegressor => (
                vec![Numeric],
                None,
                vec![int_choice("k", &K_CHOICES, 5)],
                "mean target of the k nearest neighbours",
            ),
            LogisticRegression => (
                vec![Numeric],
                None,
                vec![lambda(0.01)],
                "multinomial logistic regression by gradient descent",
            ),
            DecisionTreeClassifier => (vec![Numeric], None, tree(), "CART classification tree (Gini)"),
            KnnClassifier => (
                vec![Numeric],
                None,
                vec![int_choice("k", &K_CHOICES, 5)],
                "majority label of the k nearest neighbours",
            ),
            MajorityClassBaseline => (
                vec![Numeric, Categorical, Temporal],
                None,
                vec![],
                "predicts the most frequent training label",
            ),
            MeanBaseline => (
                vec![Numeric, Categorical, Temporal],
                None,
                vec![],
                "predicts the training target mean",
            ),
        };
    PrimitiveDescriptor {
        name,
        role: name.role(),
        tasks: name.tasks().to_vec(),
        input_kinds,
        outputs_per_input,
        hyperparams,
        description: description.into(),
    }
}

/// The fixed primitive catalog.
pub fn registry() -> Vec<PrimitiveDescriptor> {
    PrimitiveName::ALL.into_iter().map(descriptor).collect()
}

/// A primitive with concrete hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveSpec {
    pub name: PrimitiveName,
    #[serde(default)]
    pub hyperparams: BTreeMap<String, HyperValue>,
}

impl PrimitiveSpec {
    /// The primitive with its default hyperparameters.
    pub fn new(name: PrimitiveName) -> Self {
        PrimitiveSpec {
            name,
            hyperparams: descriptor(name)
                .hyperparams
                .into_iter()
                .map(|h| (h.name, h.default))
                .collect(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<HyperValue>) -> Self {
        self.hyperparams.insert(key.to_string(), value.into());
        self
    }

    /// Checks names and ranges, fills defaults and normalizes value types.
    pub fn canonical(&self) -> Result<PrimitiveSpec, PrimitiveError> {
        let desc = descriptor(self.name);
        if let Some(unknown) = self
            .hyperparams
            .keys()
            .find(|k| !desc.hyperparams.iter().any(|h| &h.name == *k))
        {
            return Err(PrimitiveError::InvalidHyperparameter {
                primitive: self.name.to_string(),
                name: unknown.clone(),
                message: "unknown hyperparameter".into(),
            });
        }
        let mut hyperparams = BTreeMap::new();
        for h in &desc.hyperparams {
            let v = self.hyperparams.get(&h.name).copied().unwrap_or(h.default);
            let v = h.range.check(v).map_err(|message| PrimitiveError::InvalidHyperparameter {
                primitive: self.name.to_string(),
                name: h.name.clone(),
                message,
            })?;
            hyperparams.insert(h.name.clone(), v);
        }
        Ok(PrimitiveSpec {
            name: self.name,
            hyperparams,
        })
    }

    pub fn real(&self, key: &str) -> f64 {
        self.hyperparams.get(key).map(|v| v.as_f64()).unwrap_or(0.0)
    }

    pub fn int(&self, key: &str) -> usize {
        self.hyperparams.get(key).map(|v| v.as_f64() as usize).unwrap_or(0)
    }
}

impl fmt::Display for PrimitiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !self.hyperparams.is_empty() {
            let parts: Vec<String> = self.hyperparams.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "({})", parts.join(", "))?;
        }
        Ok(())
    }
}
