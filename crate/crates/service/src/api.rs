//! HTTP routes. Handlers parse their inputs, then run the session work on the
//! blocking pool.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;

use curate::data::{ingest_csv, profile};
use curate::problem::Metric;

use crate::error::ApiError;
use crate::payload::{ApplyRequest, PrepareRequest, ProblemRequest, SearchRequest};
use crate::store::{dataset_view, Store};

pub const MAX_UPLOAD_BYTES: usize = 256 * 1024 * 1024;

type AppState = Arc<Store>;
type Params = Query<HashMap<String, String>>;
type ApiResult = Result<Response, ApiError>;

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(500, "INTERNAL", e.to_string()))?
}

fn ok<T: Serialize>(value: T) -> ApiResult {
    Ok(Json(value).into_response())
}

fn created<T: Serialize>(value: T) -> ApiResult {
    Ok((StatusCode::CREATED, Json(value)).into_response())
}

fn body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request("INVALID_JSON", e.to_string()))
}

fn metric_param(params: &HashMap<String, String>, key: &str) -> Result<Option<Metric>, ApiError> {
    params
        .get(key)
        .map(|m| m.parse::<Metric>().map_err(|e| ApiError::bad_request("UNKNOWN_METRIC", e)))
        .transpose()
}

fn number_param<T: std::str::FromStr>(params: &HashMap<String, String>, key: &str) -> Result<Option<T>, ApiError> {
    params
        .get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| ApiError::bad_request("INVALID_PARAMETER", format!("{key} must be a non-negative integer")))
        })
        .transpose()
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(create_session))
        .route("/sessions/{s}", get(get_session))
        .route("/sessions/{s}/datasets", post(upload_dataset))
        .route("/sessions/{s}/datasets/{d}", get(get_dataset))
        .route("/sessions/{s}/datasets/{d}/profile", get(get_profile))
        .route("/sessions/{s}/datasets/{d}/prepare", post(prepare_dataset))
        .route("/sessions/{s}/datasets/{d}/augment", get(search_augment))
        .route("/sessions/{s}/datasets/{d}/augment/apply", post(apply_augment))
        .route("/sessions/{s}/problems", post(create_problem))
        .route("/sessions/{s}/problems/{p}", get(get_problem))
        .route("/sessions/{s}/problems/{p}/search", post(start_search))
        .route("/sessions/{s}/runs/{r}", get(get_run).delete(cancel_run))
        .route("/sessions/{s}/runs/{r}/events", get(run_events))
        .route("/sessions/{s}/runs/{r}/solutions", get(run_solutions))
        .route("/sessions/{s}/runs/{r}/solutions/{id}", get(get_solution))
        .route("/sessions/{s}/runs/{r}/solutions/{id}/explain/{kind}", get(explain))
        .route("/sessions/{s}/runs/{r}/summary", get(run_summary))
        .route("/sessions/{s}/runs/{r}/parallel", get(run_parallel))
        .route("/sessions/{s}/solutions/compare", get(compare))
        .fallback(|| async { ApiError::not_found("ROUTE_NOT_FOUND", "no such endpoint") })
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(store)
}

async fn create_session(State(store): State<AppState>) -> ApiResult {
    created(blocking(move || store.create_session()).await?)
}

async fn get_session(State(store): State<AppState>, Path(s): Path<String>) -> ApiResult {
    ok(blocking(move || store.with_session(&s, |session| Ok(session.view()))).await?)
}

async fn upload_dataset(
    State(store): State<AppState>,
    Path(s): Path<String>,
    Query(params): Params,
    csv: Bytes,
) -> ApiResult {
    let name = params
        .get("name")
        .cloned()
        .ok_or_else(|| ApiError::bad_request("MISSING_PARAMETER", "upload needs a name parameter"))?;
    let view = blocking(move || {
        let session = store.session(&s)?;
        let dataset = ingest_csv(csv.as_ref(), &name)?;
        let mut session = session.lock().expect("session lock");
        session.add_dataset(&name, dataset)
    })
    .await?;
    created(view)
}

async fn get_dataset(State(store): State<AppState>, Path((s, d)): Path<(String, String)>) -> ApiResult {
    ok(blocking(move || store.with_session(&s, |session| Ok(dataset_view(&*session.dataset(&d)?)))).await?)
}

async fn get_profile(State(store): State<AppState>, Path((s, d)): Path<(String, String)>) -> ApiResult {
    ok(blocking(move || store.with_session(&s, |session| Ok(profile(&*session.dataset(&d)?)))).await?)
}

async fn prepare_dataset(
    State(store): State<AppState>,
    Path((s, d)): Path<(String, String)>,
    bytes: Bytes,
) -> ApiResult {
    let req: PrepareRequest = body(&bytes)?;
    created(blocking(move || store.with_session(&s, |session| session.prepare_dataset(&d, &req))).await?)
}

async fn search_augment(
    State(store): State<AppState>,
    Path((s, d)): Path<(String, String)>,
    Query(params): Params,
) -> ApiResult {
    let keywords = params.get("keywords").cloned().unwrap_or_default();
    ok(blocking(move || {
        let session = store.session(&s)?;
        let session = session.lock().expect("session lock");
        session.augmentations(store.corpus(), &d, &keywords)
    })
    .await?)
}

async fn apply_augment(
    State(store): State<AppState>,
    Path((s, d)): Path<(String, String)>,
    bytes: Bytes,
) -> ApiResult {
    let req: ApplyRequest = body(&bytes)?;
    created(
        blocking(move || {
            let session = store.session(&s)?;
            let mut session = session.lock().expect("session lock");
            session.apply_augmentation(store.corpus(), &d, &req)
        })
        .await?,
    )
}

async fn create_problem(State(store): State<AppState>, Path(s): Path<String>, bytes: Bytes) -> ApiResult {
    let req: ProblemRequest = body(&bytes)?;
    created(blocking(move || store.with_session(&s, |session| session.add_problem(&req))).await?)
}

async fn get_problem(State(store): State<AppState>, Path((s, p)): Path<(String, String)>) -> ApiResult {
    ok(blocking(move || store.with_session(&s, |session| session.problem_view(&p))).await?)
}

async fn start_search(State(store): State<AppState>, Path((s, p)): Path<(String, String)>, bytes: Bytes) -> ApiResult {
    let req: SearchRequest = if bytes.iter().all(u8::is_ascii_whitespace) {
        SearchRequest::default()
    } else {
        body(&bytes)?
    };
    created(
        blocking(move || {
            let seed = req.seed.unwrap_or(store.default_seed());
            store.with_session(&s, |session| session.start_run(&p, seed))
        })
        .await?,
    )
}

async fn get_run(State(store): State<AppState>, Path((s, r)): Path<(String, String)>) -> ApiResult {
    ok(blocking(move || store.with_session(&s, |session| session.run_view(&r))).await?)
}

async fn cancel_run(State(store): State<AppState>, Path((s, r)): Path<(String, String)>) -> ApiResult {
    ok(blocking(move || store.with_session(&s, |session| session.cancel(&r))).await?)
}

async fn run_events(
    State(store): State<AppState>,
    Path((s, r)): Path<(String, String)>,
    Query(params): Params,
) -> ApiResult {
    let cursor = number_param::<u64>(&params, "cursor")?.unwrap_or(0);
    ok(blocking(move || store.with_session(&s, |session| session.events(&r, cursor))).await?)
}

async fn run_solutions(
    State(store): State<AppState>,
    Path((s, r)): Path<(String, String)>,
    Query(params): Params,
) -> ApiResult {
    let metric = metric_param(&params, "sort")?;
    ok(blocking(move || store.with_session(&s, |session| session.solutions(&r, metric))).await?)
}

async fn get_solution(
    State(store): State<AppState>,
    Path((s, r, id)): Path<(String, String, String)>,
) -> ApiResult {
    ok(blocking(move || store.with_session(&s, |session| session.solution(&r, &id))).await?)
}

async fn explain(
    State(store): State<AppState>,
    Path((s, r, id, kind)): Path<(String, String, String, String)>,
    Query(params): Params,
) -> ApiResult {
    let max_rules = number_param::<usize>(&params, "max_rules")?;
    let feature = params.get("feature").cloned();
    ok(blocking(move || {
        store.with_session(&s, |session| session.explain(&r, &id, &kind, feature.as_deref(), max_rules))
    })
    .await?)
}

async fn run_summary(
    State(store): State<AppState>,
    Path((s, r)): Path<(String, String)>,
    Query(params): Params,
) -> ApiResult {
    let metric = metric_param(&params, "metric")?;
    ok(blocking(move || store.with_session(&s, |session| session.summary(&r, metric))).await?)
}

async fn run_parallel(State(store): State<AppState>, Path((s, r)): Path<(String, String)>) -> ApiResult {
    ok(blocking(move || store.with_session(&s, |session| session.parallel(&r))).await?)
}

async fn compare(State(store): State<AppState>, Path(s): Path<String>, Query(params): Params) -> ApiResult {
    let get = |k: &str| {
        params
            .get(k)
            .cloned()
            .ok_or_else(|| ApiError::bad_request("MISSING_PARAMETER", format!("compare needs parameter {k}")))
    };
    let (a, b) = (get("a")?, get("b")?);
    ok(blocking(move || store.with_session(&s, |session| session.compare(&a, &b))).await?)
}

/// Serves `router` on `listener` until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, store: Arc<Store>) -> std::io::Result<()> {
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
