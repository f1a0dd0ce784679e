//! API error envelope and the mapping from engine errors to codes.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use curate::augment::AugmentError;
use curate::data::DataError;
use curate::evaluation::EvalError;
use curate::explain::ExplainError;
use curate::learn::LearnError;
use curate::pipeline::PipelineError;
use curate::primitives::PrimitiveError;
use curate::problem::{SpecError, ValidationError};
use curate::search::SearchError;

/// Error returned by every endpoint as `{"error": {"code", "message"}}`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub status: u16,
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub error: ErrorBody,
}

impl ApiError {
    pub fn new(status: u16, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(400, code, message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(404, code, message)
    }

    pub fn conflict(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(409, code, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(500, "IO_ERROR", message)
    }

    fn from_code(status: u16, code: &'static str, err: &impl std::fmt::Display) -> Self {
        Self::new(status, code, err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let body = ErrorEnvelope {
            error: ErrorBody {
                code: self.code.to_string(),
                message: self.message,
            },
        };
        (status, Json(body)).into_response()
    }
}

impl From<DataError> for ApiError {
    fn from(e: DataError) -> Self {
        let code = match &e {
            DataError::Parse { .. } => "CSV_PARSE",
            DataError::EmptyDataset => "EMPTY_DATASET",
            DataError::ColumnNotFound(_) => "COLUMN_NOT_FOUND",
            DataError::DuplicateColumn(_) => "DUPLICATE_COLUMN",
            DataError::LengthMismatch { .. } => "COLUMN_LENGTH_MISMATCH",
            DataError::NonNumericColumn(_) => "NON_NUMERIC_COLUMN",
            DataError::InvalidValue { .. } => "INVALID_VALUE",
            DataError::SchemaMismatch(_) => "SCHEMA_MISMATCH",
            DataError::Io(_) => return ApiError::io(e.to_string()),
        };
        ApiError::from_code(400, code, &e)
    }
}

impl From<SpecError> for ApiError {
    fn from(e: SpecError) -> Self {
        let code = match &e {
            SpecError::Schema { .. } => "SPEC_SCHEMA",
            SpecError::UnsupportedTaskType(_) => "UNSUPPORTED_TASK_TYPE",
        };
        ApiError::from_code(400, code, &e)
    }
}

impl From<ValidationError> for ApiError {
    fn from(e: ValidationError) -> Self {
        let code = match &e {
            ValidationError::TargetNotFound(_) => "TARGET_NOT_FOUND",
            ValidationError::FeatureNotFound(_) => "FEATURE_NOT_FOUND",
            ValidationError::TargetInFeatures(_) => "TARGET_IN_FEATURES",
            ValidationError::DuplicateFeature(_) => "DUPLICATE_FEATURE",
            ValidationError::TaskTargetMismatch { .. } => "TASK_TARGET_MISMATCH",
            ValidationError::MetricTaskMismatch { .. } => "METRIC_TASK_MISMATCH",
            ValidationError::PrimaryMetricNotReported(_) => "PRIMARY_METRIC_NOT_REPORTED",
            ValidationError::EmptyFeatures => "EMPTY_FEATURES",
            ValidationError::UnsupportedFeatureType { .. } => "UNSUPPORTED_FEATURE_TYPE",
            ValidationError::InvalidBudget(_) => "INVALID_BUDGET",
            ValidationError::InvalidEvalMethod(_) => "INVALID_EVAL_METHOD",
            ValidationError::NoUsableRows => "NO_USABLE_ROWS",
        };
        ApiError::from_code(400, code, &e)
    }
}

impl From<LearnError> for ApiError {
    fn from(e: LearnError) -> Self {
        let code = match &e {
            LearnError::SingularSystem => "SINGULAR_SYSTEM",
            LearnError::EmptyTrainingSet => "EMPTY_TRAINING_SET",
            LearnError::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
        };
        ApiError::from_code(400, code, &e)
    }
}

impl From<PrimitiveError> for ApiError {
    fn from(e: PrimitiveError) -> Self {
        let code = match &e {
            PrimitiveError::UnknownPrimitive(_) => "UNKNOWN_PRIMITIVE",
            PrimitiveError::InvalidHyperparameter { .. } => "INVALID_HYPERPARAMETER",
            PrimitiveError::NonNumericInput { .. } => "NON_NUMERIC_INPUT",
            PrimitiveError::MissingValues { .. } => "MISSING_VALUES",
            PrimitiveError::MissingTarget(_) => "MISSING_TARGET",
            PrimitiveError::TargetKind { .. } => "TARGET_KIND",
            PrimitiveError::SchemaMismatch { .. } => "INPUT_SCHEMA_MISMATCH",
            PrimitiveError::NotAnEstimator(_) => "NOT_AN_ESTIMATOR",
            PrimitiveError::NotAPreprocessor(_) => "NOT_A_PREPROCESSOR",
            PrimitiveError::Learn(inner) => ApiError::from(inner.clone()).code,
        };
        ApiError::from_code(400, code, &e)
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::InvalidPipelineStructure(_) => "INVALID_PIPELINE_STRUCTURE",
            PipelineError::IncompatibleEstimator { .. } => "INCOMPATIBLE_ESTIMATOR",
            PipelineError::Step { source, .. } => ApiError::from(source.clone()).code,
            PipelineError::IdMismatch { .. } => "PIPELINE_ID_MISMATCH",
            PipelineError::Data(inner) => return inner.clone().into(),
        };
        ApiError::from_code(400, code, &e)
    }
}

impl From<EvalError> for ApiError {
    fn from(e: EvalError) -> Self {
        let code = match &e {
            EvalError::UndefinedMetric { .. } => "UNDEFINED_METRIC",
            EvalError::LengthMismatch { .. } => "PREDICTION_LENGTH_MISMATCH",
            EvalError::EmptyInput => "EMPTY_INPUT",
            EvalError::WrongTargetKind { .. } => "WRONG_TARGET_KIND",
            EvalError::TooFewRows { .. } => "TOO_FEW_ROWS",
            EvalError::Fold { source, .. } => ApiError::from(source.clone()).code,
            EvalError::Pipeline(inner) => return inner.clone().into(),
            EvalError::Cancelled => return ApiError::conflict("CANCELLED", e.to_string()),
        };
        ApiError::from_code(400, code, &e)
    }
}

impl From<SearchError> for ApiError {
    fn from(e: SearchError) -> Self {
        match &e {
            SearchError::NotBound { .. } => ApiError::from_code(409, "PROBLEM_NOT_BOUND", &e),
            SearchError::NoScoredSolutions => ApiError::from_code(409, "NO_SCORED_SOLUTIONS", &e),
            SearchError::UnknownMetric(_) => ApiError::from_code(400, "UNKNOWN_METRIC", &e),
            SearchError::SolutionNotFound(_) => ApiError::from_code(404, "SOLUTION_NOT_FOUND", &e),
        }
    }
}

impl From<ExplainError> for ApiError {
    fn from(e: ExplainError) -> Self {
        let code = match &e {
            ExplainError::WrongTaskType { .. } => "WRONG_TASK_TYPE",
            ExplainError::FeatureNotFound(_) => "EXPLAIN_FEATURE_NOT_FOUND",
            ExplainError::UnsupportedFeature { .. } => "UNSUPPORTED_FEATURE",
            ExplainError::InvalidMaxRules(_) => "INVALID_MAX_RULES",
            ExplainError::NoRows => "NO_ROWS",
            ExplainError::Pipeline(inner) => return inner.clone().into(),
            ExplainError::Data(inner) => return inner.clone().into(),
        };
        ApiError::from_code(400, code, &e)
    }
}

impl From<AugmentError> for ApiError {
    fn from(e: AugmentError) -> Self {
        match &e {
            AugmentError::StaleCandidate { .. } => ApiError::from_code(409, "STALE_CANDIDATE", &e),
            AugmentError::EntryNotFound(_) => ApiError::from_code(404, "CORPUS_ENTRY_NOT_FOUND", &e),
            AugmentError::InvalidPlan(_) => ApiError::from_code(400, "INVALID_AUGMENTATION_PLAN", &e),
            AugmentError::Io(_) => ApiError::io(e.to_string()),
            AugmentError::Data(inner) => inner.clone().into(),
        }
    }
}
