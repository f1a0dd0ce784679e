//! Linear pipelines: zero or more preprocessors followed by one estimator.

mod diff;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::data::{hex_prefix, DataError, Dataset};
use crate::primitives::{
    fit, FeatureField, FeatureKind, FeatureTable, FittedPrimitive, PrimitiveError, PrimitiveName, PrimitiveSpec,
    Role, Target,
};
use crate::problem::{TaskType, ValidatedSpec};

pub use diff::{diff, DiffEntry, StepDiff, StepStatus};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("invalid pipeline structure: {0}")]
    InvalidPipelineStructure(String),
    #[error("estimator {estimator} does not support {task}")]
    IncompatibleEstimator { estimator: PrimitiveName, task: TaskType },
    #[error("step {index} ({primitive}): {source}")]
    Step {
        index: usize,
        primitive: PrimitiveName,
        source: PrimitiveError,
    },
    #[error("pipeline id {found} does not match its steps (expected {expected})")]
    IdMismatch { expected: String, found: String },
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Deserialize)]
struct RawPipeline {
    #[serde(default)]
    id: Option<String>,
    steps: Vec<PrimitiveSpec>,
}

/// An ordered list of primitive steps. The id is a hash of the canonical
/// steps, so equal pipelines share an id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPipeline")]
pub struct Pipeline {
    id: String,
    steps: Vec<PrimitiveSpec>,
}

impl TryFrom<RawPipeline> for Pipeline {
    type Error = PipelineError;

    fn try_from(raw: RawPipeline) -> Result<Self, Self::Error> {
        let p = Pipeline::new(raw.steps)?;
        match raw.id {
            Some(id) if id != p.id => Err(PipelineError::IdMismatch {
                expected: p.id,
                found: id,
            }),
            _ => Ok(p),
        }
    }
}

impl Pipeline {
    /// Canonicalizes hyperparameters and checks that exactly one estimator
    /// comes last.
    pub fn new(steps: Vec<PrimitiveSpec>) -> Result<Pipeline, PipelineError> {
        let steps = steps
            .iter()
            .enumerate()
            .map(|(index, s)| {
                s.canonical().map_err(|source| PipelineError::Step {
                    index,
                    primitive: s.name,
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let Some(last) = steps.last() else {
            return Err(PipelineError::InvalidPipelineStructure("pipeline has no steps".into()));
        };
        if last.name.role() != Role::Estimator {
            return Err(PipelineError::InvalidPipelineStructure(format!(
                "last step {} is not an estimator",
                last.name
            )));
        }
        if let Some((i, s)) = steps[..steps.len() - 1]
            .iter()
            .enumerate()
            .find(|(_, s)| s.name.role() == Role::Estimator)
        {
            return Err(PipelineError::InvalidPipelineStructure(format!(
                "estimator {} at step {i} is not last",
                s.name
            )));
        }
        let canonical = serde_json::to_vec(&steps).expect("steps serialize");
        let id = hex_prefix(&Sha256::digest(&canonical), 16);
        Ok(Pipeline { id, steps })
    }

    pub fn of(names: &[PrimitiveName]) -> Result<Pipeline, PipelineError> {
        Pipeline::new(names.iter().map(|&n| PrimitiveSpec::new(n)).collect())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn steps(&self) -> &[PrimitiveSpec] {
        &self.steps
    }

    pub fn estimator(&self) -> &PrimitiveSpec {
        self.steps.last().expect("nonempty")
    }

    pub fn check_task(&self, task: TaskType) -> Result<(), PipelineError> {
        let est = self.estimator().name;
        if est.supports(task) {
            Ok(())
        } else {
            Err(PipelineError::IncompatibleEstimator { estimator: est, task })
        }
    }

    /// Propagates column kinds through the preprocessors and checks that the
    /// estimator receives only numeric columns (baselines accept anything).
    pub fn check_schema(&self, input: &[FeatureField]) -> Result<(), PipelineError> {
        let mut kinds: Vec<FeatureKind> = input.iter().map(|f| f.kind).collect();
        for step in &self.steps[..self.steps.len() - 1] {
            for k in kinds.iter_mut() {
                *k = match (step.name, *k) {
                    (PrimitiveName::OneHotEncoder, FeatureKind::Categorical)
                    | (PrimitiveName::DatetimeExpander, FeatureKind::Temporal) => FeatureKind::Numeric,
                    (_, k) => k,
                };
            }
        }
        let est = self.estimator().name;
        if matches!(est, PrimitiveName::MeanBaseline | PrimitiveName::MajorityClassBaseline) {
            return Ok(());
        }
        if let Some((f, k)) = input.iter().zip(&kinds).find(|(_, k)| **k != FeatureKind::Numeric) {
            return Err(PipelineError::InvalidPipelineStructure(format!(
                "{est} would receive {} column {:?}",
                serde_json::to_value(k).expect("kind").as_str().unwrap_or_default(),
                f.name
            )));
        }
        Ok(())
    }

    /// Steps rendered as `a -> b(k=v) -> c`.
    pub fn describe(&self) -> String {
        self.steps.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" -> ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub pipeline: Pipeline,
    pub feature_schema: Vec<FeatureField>,
    pub steps: Vec<FittedPrimitive>,
}

/// Fits `pipeline` on the given rows of `dataset`, using only the spec's
/// features and target.
pub fn fit_pipeline(
    pipeline: &Pipeline,
    dataset: &Dataset,
    spec: &ValidatedSpec,
    rows: &[usize],
) -> Result<FittedPipeline, PipelineError> {
    pipeline.check_task(spec.task_type())?;
    let x = FeatureTable::from_dataset(dataset, spec.features(), rows)?;
    let y = Target::from_dataset(dataset, spec.target(), rows)?;
    fit_table(pipeline, &x, &y)
}

/// Fits on an already-extracted feature table and target.
pub fn fit_table(pipeline: &Pipeline, x: &FeatureTable, y: &Target) -> Result<FittedPipeline, PipelineError> {
    let feature_schema = x.schema();
    pipeline.check_schema(&feature_schema)?;
    let mut current = x.clone();
    let mut fitted = Vec::with_capacity(pipeline.steps.len());
    for (index, step) in pipeline.steps.iter().enumerate() {
        let annotate = |source| PipelineError::Step {
            index,
            primitive: step.name,
            source,
        };
        let is_estimator = step.name.role() == Role::Estimator;
        let f = fit(step, &current, is_estimator.then_some(y)).map_err(annotate)?;
        if !is_estimator {
            current = f.transform(&current).map_err(annotate)?;
        }
        fitted.push(f);
    }
    Ok(FittedPipeline {
        pipeline: pipeline.clone(),
        feature_schema,
        steps: fitted,
    })
}

impl FittedPipeline {
    pub fn feature_names(&self) -> Vec<String> {
        self.feature_schema.iter().map(|f| f.name.clone()).collect()
    }

    pub fn predict(&self, x: &FeatureTable) -> Result<Target, PipelineError> {
        let mut current = x.clone();
        let last = self.steps.len() - 1;
        for (index, step) in self.steps.iter().enumerate() {
            let annotate = |source| PipelineError::Step {
                index,
                primitive: step.spec.name,
                source,
            };
            if index == last {
                return step.predict(&current).map_err(annotate);
            }
            current = step.transform(&current).map_err(annotate)?;
        }
        unreachable!("pipeline has an estimator")
    }

    /// Predictions for `rows` of `dataset`.
    pub fn predict_rows(&self, dataset: &Dataset, rows: &[usize]) -> Result<Target, PipelineError> {
        let x = FeatureTable::from_dataset(dataset, &self.feature_names(), rows)?;
        self.predict(&x)
    }

    pub fn estimator(&self) -> &FittedPrimitive {
        self.steps.last().expect("nonempty")
    }
}
