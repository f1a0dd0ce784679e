//! Pipeline templates and hyperparameter grids.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::pipeline::Pipeline;
use crate::primitives::{descriptor, FeatureData, FeatureTable, PrimitiveName, PrimitiveSpec};
use crate::problem::TaskType;

/// A preprocessing chain plus an estimator; hyperparameters vary per candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub preprocessors: Vec<PrimitiveName>,
    pub estimator: PrimitiveName,
}

impl Template {
    /// Every hyperparameter combination, default first, then grid order.
    pub fn grid(&self) -> Vec<Pipeline> {
        let mut combos: Vec<PrimitiveSpec> = vec![PrimitiveSpec {
            name: self.estimator,
            hyperparams: Default::default(),
        }];
        for h in descriptor(self.estimator).hyperparams {
            let values = h.range.grid();
            if values.is_empty() {
                continue;
            }
            let name = &h.name;
            let values = &values;
            combos = combos
                .into_iter()
                .flat_map(|c| values.iter().map(move |&v| c.clone().with(name, v)))
                .collect();
        }
        let default = self.pipeline(PrimitiveSpec::new(self.estimator));
        let mut out = vec![default.clone()];
        out.extend(
            combos
                .into_iter()
                .map(|c| self.pipeline(c))
                .filter(|p| p.id() != default.id()),
        );
        out
    }

    fn pipeline(&self, estimator: PrimitiveSpec) -> Pipeline {
        let mut steps: Vec<PrimitiveSpec> = self.preprocessors.iter().map(|&p| PrimitiveSpec::new(p)).collect();
        steps.push(estimator);
        Pipeline::new(steps).expect("templates are well formed")
    }
}

/// Templates for a feature table: the baseline first, then each estimator
/// with the preprocessing the column kinds require (impute, encode
/// categoricals, expand timestamps, scale), trying both scalers for
/// scale-sensitive estimators.
pub fn templates(task: TaskType, features: &FeatureTable) -> Vec<Template> {
    use PrimitiveName::*;
    let mut has_missing = false;
    let mut has_categorical = false;
    let mut has_temporal = false;
    for c in features.columns() {
        match &c.data {
            FeatureData::Numeric(v) => has_missing |= v.iter().any(Option::is_none),
            FeatureData::Categorical(_) => has_categorical = true,
            FeatureData::Temporal(v) => {
                has_temporal = true;
                has_missing |= v.iter().any(Option::is_none);
            }
        }
    }
    let mut chain = Vec::new();
    if has_missing {
        chain.push(MeanImputer);
    }
    if has_categorical {
        chain.push(OneHotEncoder);
    }
    if has_temporal {
        chain.push(DatetimeExpander);
    }
    let (baseline, estimators): (PrimitiveName, &[PrimitiveName]) = match task {
        TaskType::Regression => (
            MeanBaseline,
            &[LinearRegression, RidgeRegression, LassoRegression, DecisionTreeRegressor, KnnRegressor],
        ),
        TaskType::Classification => (
            MajorityClassBaseline,
            &[LogisticRegression, DecisionTreeClassifier, KnnClassifier],
        ),
    };
    let mut out = vec![Template {
        preprocessors: vec![],
        estimator: baseline,
    }];
    for &est in estimators {
        let scalers: &[PrimitiveName] = if matches!(est, DecisionTreeRegressor | DecisionTreeClassifier) {
            &[]
        } else {
            &[StandardScaler, MinmaxScaler]
        };
        if scalers.is_empty() {
            out.push(Template {
                preprocessors: chain.clone(),
                estimator: est,
            });
        }
        for &s in scalers {
            let mut pre = chain.clone();
            pre.push(s);
            out.push(Template {
                preprocessors: pre,
                estimator: est,
            });
        }
    }
    out
}

/// Tracks which grid points of each template are still unevaluated.
pub(crate) struct CandidatePool {
    grids: Vec<Vec<Pipeline>>,
    used: Vec<Vec<bool>>,
    seen: BTreeSet<String>,
}

impl CandidatePool {
    pub fn new(templates: &[Template]) -> Self {
        let grids: Vec<Vec<Pipeline>> = templates.iter().map(Template::grid).collect();
        let used = grids.iter().map(|g| vec![false; g.len()]).collect();
        CandidatePool {
            grids,
            used,
            seen: BTreeSet::new(),
        }
    }

    pub fn remaining(&self, template: usize) -> usize {
        self.used[template].iter().filter(|u| !**u).count()
    }

    pub fn total_remaining(&self) -> usize {
        (0..self.grids.len()).map(|t| self.remaining(t)).sum()
    }

    /// Marks grid point `i` of template `t` used; `None` if its id was already taken.
    pub fn take(&mut self, t: usize, i: usize) -> Option<Pipeline> {
        if self.used[t][i] {
            return None;
        }
        self.used[t][i] = true;
        let p = self.grids[t][i].clone();
        self.seen.insert(p.id().to_string()).then_some(p)
    }

    pub fn take_random(&mut self, t: usize, rng: &mut ChaCha8Rng) -> Option<Pipeline> {
        let free: Vec<usize> = (0..self.grids[t].len()).filter(|&i| !self.used[t][i]).collect();
        if free.is_empty() {
            return None;
        }
        let i = free[rng.random_range(0..free.len())];
        self.take(t, i)
    }

    pub fn take_all(&mut self) -> Vec<(usize, Pipeline)> {
        let mut out = Vec::new();
        for t in 0..self.grids.len() {
            for i in 0..self.grids[t].len() {
                if let Some(p) = self.take(t, i) {
                    out.push((t, p));
                }
            }
        }
        out
    }
}
