use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDateTime};
use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::table::{FeatureColumn, FeatureData, FeatureField, FeatureKind, FeatureTable, Target};
use super::{PrimitiveError, PrimitiveName, PrimitiveSpec, Role};
use crate::data::temporal::{from_epoch_seconds, to_epoch_seconds};
use crate::learn::knn::KnnModel;
use crate::learn::lasso::{lasso, LassoParams};
use crate::learn::linear::{least_squares_or_ridge, ridge, LinearModel};
use crate::learn::logistic::{fit_softmax, LogisticParams, SoftmaxModel};
use crate::learn::tree::{ClassificationTree, RegressionTree, TreeParams};

/// `(x - offset) / scale` for one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub column: String,
    pub offset: f64,
    pub scale: f64,
}

/// What a primitive learned at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnedState {
    Imputer {
        numeric: BTreeMap<String, f64>,
        temporal: BTreeMap<String, NaiveDateTime>,
    },
    Scaler {
        columns: Vec<ScaleParams>,
    },
    OneHot {
        categories: BTreeMap<String, Vec<String>>,
    },
    DatetimeExpander {
        columns: Vec<String>,
    },
    Linear {
        model: LinearModel<f64>,
    },
    Lasso {
        model: LinearModel<f64>,
        sweeps: usize,
        converged: bool,
    },
    Logistic {
        classes: Vec<String>,
        model: SoftmaxModel<f64>,
        iterations: usize,
    },
    RegressionTree {
        tree: RegressionTree<f64>,
    },
    ClassificationTree {
        classes: Vec<String>,
        tree: ClassificationTree<f64>,
    },
    KnnRegressor {
        model: KnnModel<f64, f64>,
    },
    KnnClassifier {
        classes: Vec<String>,
        model: KnnModel<f64, usize>,
    },
    Majority {
        label: String,
    },
    Mean {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPrimitive {
    pub spec: PrimitiveSpec,
    pub input_schema: Vec<FeatureField>,
    pub state: LearnedState,
}

pub const EXPANDED_PARTS: [&str; 4] = ["year", "month", "day", "weekday"];

/// Fits `spec` on `x` (and `y` for estimators). Fitting is deterministic.
pub fn fit(spec: &PrimitiveSpec, x: &FeatureTable, y: Option<&Target>) -> Result<FittedPrimitive, PrimitiveError> {
    let spec = spec.canonical()?;
    let state = match spec.name.role() {
        Role::Preprocessor => fit_preprocessor(&spec, x)?,
        Role::Estimator => {
            let y = y.ok_or_else(|| PrimitiveError::MissingTarget(spec.name.to_string()))?;
            if y.len() != x.rows() {
                return Err(crate::learn::LearnError::DimensionMismatch {
                    expected: x.rows(),
                    found: y.len(),
                }
                .into());
            }
            fit_estimator(&spec, x, y)?
        }
    };
    Ok(FittedPrimitive {
        spec,
        input_schema: x.schema(),
        state,
    })
}

fn present_mean(values: &[Option<f64>]) -> Option<f64> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

fn fit_preprocessor(spec: &PrimitiveSpec, x: &FeatureTable) -> Result<LearnedState, PrimitiveError> {
    let cols = x.columns();
    Ok(match spec.name {
        PrimitiveName::MeanImputer | PrimitiveName::ConstantImputer => {
            let constant = spec.name == PrimitiveName::ConstantImputer;
            let mut numeric = BTreeMap::new();
            let mut temporal = BTreeMap::new();
            for c in cols {
                match &c.data {
                    FeatureData::Numeric(v) => {
                        let fill = if constant {
                            spec.real("value")
                        } else {
                            present_mean(v).unwrap_or(0.0)
                        };
                        numeric.insert(c.name.clone(), fill);
                    }
                    FeatureData::Temporal(v) => {
                        let secs: Vec<Option<f64>> = v.iter().map(|t| t.as_ref().map(to_epoch_seconds)).collect();
                        let fill = if constant {
                            secs.iter().flatten().copied().fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.min(s))))
                        } else {
                            present_mean(&secs)
                        };
                        let fill = fill.and_then(|s| from_epoch_seconds(s.round())).unwrap_or_default();
                        temporal.insert(c.name.clone(), fill);
                    }
                    FeatureData::Categorical(_) => {}
                }
            }
            LearnedState::Imputer { numeric, temporal }
        }
        PrimitiveName::StandardScaler | PrimitiveName::MinmaxScaler => {
            let standard = spec.name == PrimitiveName::StandardScaler;
            let mut columns = Vec::new();
            for c in cols {
                let FeatureData::Numeric(v) = &c.data else { continue };
                let present: Vec<f64> = v.iter().flatten().copied().collect();
                let (offset, scale) = if standard {
                    (
                        crate::stats::mean(&present).unwrap_or(0.0),
                        crate::stats::std_dev(&present).unwrap_or(1.0),
                    )
                } else {
                    let (lo, hi) = crate::stats::min_max(&present).unwrap_or((0.0, 1.0));
                    (lo, hi - lo)
                };
                columns.push(ScaleParams {
                    column: c.name.clone(),
                    offset,
                    scale: if scale > 0.0 && scale.is_finite() { scale } else { 1.0 },
                });
            }
            LearnedState::Scaler { columns }
        }
        PrimitiveName::OneHotEncoder => {
            let mut categories = BTreeMap::new();
            for c in cols {
                if let FeatureData::Categorical(v) = &c.data {
                    let mut cats: Vec<String> = v.iter().flatten().cloned().collect();
                    cats.sort();
                    cats.dedup();
                    categories.insert(c.name.clone(), cats);
                }
            }
            LearnedState::OneHot { categories }
        }
        PrimitiveName::DatetimeExpander => LearnedState::DatetimeExpander {
            columns: cols
                .iter()
                .filter(|c| c.data.kind() == FeatureKind::Temporal)
                .map(|c| c.name.clone())
                .collect(),
        },
        other => return Err(PrimitiveError::NotAPreprocessor(other.to_string())),
    })
}

fn class_index(spec: &PrimitiveSpec, y: &Target) -> Result<(Vec<String>, Vec<usize>), PrimitiveError> {
    let Target::Labels(labels) = y else {
        return Err(PrimitiveError::TargetKind {
            primitive: spec.name.to_string(),
            expected: "categorical".into(),
        });
    };
    let mut classes = labels.clone();
    classes.sort();
    classes.dedup();
    let idx = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    Ok((classes, idx))
}

fn numeric_target<'a>(spec: &PrimitiveSpec, y: &'a Target) -> Result<&'a [f64], PrimitiveError> {
    match y {
        Target::Numeric(v) => Ok(v),
        Target::Labels(_) => Err(PrimitiveError::TargetKind {
            primitive: spec.name.to_string(),
            expected: "numeric".into(),
        }),
    }
}

fn fit_estimator(spec: &PrimitiveSpec, x: &FeatureTable, y: &Target) -> Result<LearnedState, PrimitiveError> {
    use PrimitiveName::*;
    let name = spec.name.as_str();
    if x.rows() == 0 {
        return Err(crate::learn::LearnError::EmptyTrainingSet.into());
    }
    let tree_params = || TreeParams {
        max_depth: spec.int("max_depth"),
        min_leaf: spec.int("min_leaf"),
    };
    Ok(match spec.name {
        MajorityClassBaseline => {
            let (classes, idx) = class_index(spec, y)?;
            let mut counts = vec![0usize; classes.len()];
            for i in idx {
                counts[i] += 1;
            }
            let mut best = 0;
            for (k, &c) in counts.iter().enumerate() {
                if c > counts[best] {
                    best = k;
                }
            }
            LearnedState::Majority {
                label: classes[best].clone(),
            }
        }
        MeanBaseline => {
            let y = numeric_target(spec, y)?;
            LearnedState::Mean {
                value: y.iter().sum::<f64>() / y.len() as f64,
            }
        }
        LinearRegression | RidgeRegression | LassoRegression | DecisionTreeRegressor | KnnRegressor => {
            let y = Array1::from(numeric_target(spec, y)?.to_vec());
            let m = x.to_matrix(name)?;
            match spec.name {
                LinearRegression => LearnedState::Linear {
                    model: least_squares_or_ridge(m.view(), y.view())?,
                },
                RidgeRegression => LearnedState::Linear {
                    model: ridge(m.view(), y.view(), spec.real("lambda"))?,
                },
                LassoRegression => {
                    let f = lasso(m.view(), y.view(), &LassoParams::new(spec.real("lambda")))?;
                    LearnedState::Lasso {
                        model: f.model,
                        sweeps: f.sweeps,
                        converged: f.converged,
                    }
                }
                DecisionTreeRegressor => LearnedState::RegressionTree {
                    tree: RegressionTree::fit(m.view(), y.view(), tree_params())?,
                },
                _ => LearnedState::KnnRegressor {
                    model: KnnModel::fit(m.view(), y.as_slice().expect("contiguous"), spec.int("k"))?,
                },
            }
        }
        LogisticRegression | DecisionTreeClassifier | KnnClassifier => {
            let (classes, idx) = class_index(spec, y)?;
            let m = x.to_matrix(name)?;
            match spec.name {
                LogisticRegression => {
                    let f = fit_softmax(m.view(), &idx, classes.len(), &LogisticParams::new(spec.real("lambda")))?;
                    LearnedState::Logistic {
                        classes,
                        model: f.model,
                        iterations: f.iterations,
                    }
                }
                DecisionTreeClassifier => LearnedState::ClassificationTree {
                    tree: ClassificationTree::fit(m.view(), &idx, classes.len(), tree_params())?,
                    classes,
                },
                _ => LearnedState::KnnClassifier {
                    model: KnnModel::fit(m.view(), &idx, spec.int("k"))?,
                    classes,
                },
            }
        }
        other => return Err(PrimitiveError::NotAnEstimator(other.to_string())),
    })
}

impl FittedPrimitive {
    /// Reorders `x` to the fit-time column order, failing if names or kinds differ.
    fn align(&self, x: &FeatureTable) -> Result<FeatureTable, PrimitiveError> {
        let have = x.schema();
        let missing: Vec<String> = self
            .input_schema
            .iter()
            .filter(|f| !have.contains(f))
            .map(|f| f.name.clone())
            .collect();
        let extra: Vec<String> = have
            .iter()
            .filter(|f| !self.input_schema.contains(f))
            .map(|f| f.name.clone())
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(PrimitiveError::SchemaMismatch { missing, extra });
        }
        if have == self.input_schema {
            return Ok(x.clone());
        }
        let columns = self
            .input_schema
            .iter()
            .map(|f| x.column(&f.name).expect("checked").clone())
            .collect();
        Ok(FeatureTable::new(columns, x.rows()))
    }

    /// Column names and kinds produced by [`transform`](Self::transform).
    pub fn output_schema(&self) -> Vec<FeatureField> {
        let numeric = |name: String| FeatureField {
            name,
            kind: FeatureKind::Numeric,
        };
        let mut out = Vec::new();
        for f in &self.input_schema {
            match &self.state {
                LearnedState::OneHot { categories } if f.kind == FeatureKind::Categorical => {
                    out.extend(categories[&f.name].iter().map(|c| numeric(format!("{}={}", f.name, c))));
                }
                LearnedState::DatetimeExpander { .. } if f.kind == FeatureKind::Temporal => {
                    out.extend(EXPANDED_PARTS.iter().map(|p| numeric(format!("{}_{}", f.name, p))));
                }
                _ => out.push(f.clone()),
            }
        }
        out
    }

    pub fn transform(&self, x: &FeatureTable) -> Result<FeatureTable, PrimitiveError> {
        if self.spec.name.role() != Role::Preprocessor {
            return Err(PrimitiveError::NotAPreprocessor(self.spec.name.to_string()));
        }
        let x = self.align(x)?;
        let rows = x.rows();
        let mut out = Vec::with_capacity(x.columns().len());
        for c in x.into_columns() {
            match (&self.state, c.data) {
                (LearnedState::Imputer { numeric, .. }, FeatureData::Numeric(v)) => {
                    let fill = numeric[&c.name];
                    out.push(FeatureColumn {
                        data: FeatureData::Numeric(v.into_iter().map(|x| Some(x.unwrap_or(fill))).collect()),
                        name: c.name,
                    });
                }
                (LearnedState::Imputer { temporal, .. }, FeatureData::Temporal(v)) => {
                    let fill = temporal[&c.name];
                    out.push(FeatureColumn {
                        data: FeatureData::Temporal(v.into_iter().map(|x| Some(x.unwrap_or(fill))).collect()),
                        name: c.name,
                    });
                }
                (LearnedState::Scaler { columns }, FeatureData::Numeric(v)) => {
                    let p = columns.iter().find(|p| p.column == c.name).expect("fitted column");
                    out.push(FeatureColumn {
                        data: FeatureData::Numeric(v.into_iter().map(|x| x.map(|x| (x - p.offset) / p.scale)).collect()),
                        name: c.name,
                    });
                }
                (LearnedState::OneHot { categories }, FeatureData::Categorical(v)) => {
                    for cat in &categories[&c.name] {
                        out.push(FeatureColumn {
                            name: format!("{}={}", c.name, cat),
                            data: FeatureData::Numeric(
                                v.iter()
                                    .map(|x| Some(if x.as_deref() == Some(cat.as_str()) { 1.0 } else { 0.0 }))
                                    .collect(),
                            ),
                        });
                    }
                }
                (LearnedState::DatetimeExpander { .. }, FeatureData::Temporal(v)) => {
                    let parts: [fn(&NaiveDateTime) -> f64; 4] = [
                        |t| t.year() as f64,
                        |t| t.month() as f64,
                        |t| t.day() as f64,
                        |t| t.weekday().num_days_from_monday() as f64,
                    ];
                    for (part, f) in EXPANDED_PARTS.iter().zip(parts) {
                        out.push(FeatureColumn {
                            name: format!("{}_{}", c.name, part),
                            data: FeatureData::Numeric(v.iter().map(|t| t.as_ref().map(f)).collect()),
                        });
                    }
                }
                (_, data) => out.push(FeatureColumn { name: c.name, data }),
            }
        }
        Ok(FeatureTable::new(out, rows))
    }

    pub fn predict(&self, x: &FeatureTable) -> Result<Target, PrimitiveError> {
        if self.spec.name.role() != Role::Estimator {
            return Err(PrimitiveError::NotAnEstimator(self.spec.name.to_string()));
        }
        let x = self.align(x)?;
        let n = x.rows();
        match &self.state {
            LearnedState::Majority { label } => return Ok(Target::Labels(vec![label.clone(); n])),
            LearnedState::Mean { value } => return Ok(Target::Numeric(vec![*value; n])),
            _ => {}
        }
        let m = x.to_matrix(self.spec.name.as_str())?;
        let rows = || m.rows().into_iter();
        let labels = |classes: &[String], f: &dyn Fn(ArrayView1<f64>) -> usize| {
            Target::Labels(rows().map(|r| classes[f(r)].clone()).collect())
        };
        Ok(match &self.state {
            LearnedState::Linear { model } | LearnedState::Lasso { model, .. } => {
                Target::Numeric(rows().map(|r| model.predict_row(r)).collect())
            }
            LearnedState::RegressionTree { tree } => Target::Numeric(rows().map(|r| tree.predict_row(r)).collect()),
            LearnedState::KnnRegressor { model } => Target::Numeric(rows().map(|r| model.predict_row(r)).collect()),
            LearnedState::Logistic { classes, model, .. } => labels(classes, &|r| model.predict_row(r)),
            LearnedState::ClassificationTree { classes, tree } => labels(classes, &|r| tree.predict_row(r)),
            LearnedState::KnnClassifier { classes, model } => {
                labels(classes, &|r| model.predict_class(r, classes.len()))
            }
            _ => unreachable!("estimator state"),
        })
    }

    /// True when least squares hit a singular system and fell back to ridge.
    pub fn ridge_fallback(&self) -> bool {
        matches!(&self.state, LearnedState::Linear { model } if model.ridge_fallback)
    }
}
