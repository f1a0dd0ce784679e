//! In-process client for the router and the end-to-end API scenario shared
//! by the API tests and the acceptance suite.

#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use curate::augment::index_corpus;
use curate::demo::write_demo;
use curate_service::api::router;
use curate_service::Store;

pub const DEMO_SEED: u64 = 11;
pub const SEARCH_SEED: u64 = 5;
pub const MAX_PIPELINES: usize = 12;

pub struct Client {
    pub app: Router,
}

impl Client {
    pub fn open(sessions: &Path, corpus: &Path) -> Client {
        let corpus = index_corpus(corpus).expect("corpus indexes");
        let store = Store::new(sessions.to_path_buf(), corpus, 0);
        Client {
            app: router(Arc::new(store)),
        }
    }

    pub async fn send(&self, method: Method, uri: &str, body: Body) -> (StatusCode, Value) {
        let req = Request::builder().method(method).uri(uri).body(body).expect("request");
        let resp = self.app.clone().oneshot(req).await.expect("router is infallible");
        let status = resp.status();
        let bytes = resp.into_body().collect().await.expect("body").to_bytes();
        let value = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
        (status, value)
    }

    pub async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.send(Method::GET, uri, Body::empty()).await
    }

    pub async fn delete(&self, uri: &str) -> (StatusCode, Value) {
        self.send(Method::DELETE, uri, Body::empty()).await
    }

    pub async fn post(&self, uri: &str, body: &Value) -> (StatusCode, Value) {
        self.send(Method::POST, uri, Body::from(body.to_string())).await
    }

    pub async fn post_raw(&self, uri: &str, body: Vec<u8>) -> (StatusCode, Value) {
        self.send(Method::POST, uri, Body::from(body)).await
    }

    /// GET that must succeed.
    pub async fn ok(&self, uri: &str) -> Value {
        let (status, v) = self.get(uri).await;
        assert!(status.is_success(), "GET {uri} -> {status}: {v}");
        v
    }

    /// POST that must succeed.
    pub async fn created(&self, uri: &str, body: &Value) -> Value {
        let (status, v) = self.post(uri, body).await;
        assert!(status.is_success(), "POST {uri} -> {status}: {v}");
        v
    }

    /// Polls the events endpoint until the run finishes and returns every
    /// page's solutions concatenated in order.
    pub async fn drain(&self, session: &str, run: &str, pause: Duration) -> Vec<Value> {
        let mut cursor = 0;
        let mut all = Vec::new();
        loop {
            let page = self.ok(&format!("/sessions/{session}/runs/{run}/events?cursor={cursor}")).await;
            all.extend(page["solutions"].as_array().expect("solutions").iter().cloned());
            cursor = page["next_cursor"].as_u64().expect("cursor");
            if page["state"]["state"] == "finished" {
                let rest = self.ok(&format!("/sessions/{session}/runs/{run}/events?cursor={cursor}")).await;
                assert!(rest["solutions"].as_array().unwrap().is_empty());
                return all;
            }
            tokio::time::sleep(pause).await;
        }
    }
}

pub fn demo_problem(features: &[&str]) -> Value {
    let mut spec = curate::demo::problem(features);
    spec.budget.max_pipelines = MAX_PIPELINES;
    serde_json::from_str(&spec.to_json()).expect("spec json")
}

fn best_mae(table: &Value) -> f64 {
    table["rows"][0]["scores"]["mae"].as_f64().expect("ranked row has mae")
}

/// What the scenario observed.
pub struct Scenario {
    pub session: String,
    /// Every GET issued after the runs finished, in order.
    pub reads: Vec<String>,
    pub mae_before: f64,
    pub mae_after: f64,
    pub replay_matches: bool,
}

/// upload -> problem -> search -> rank -> explain -> augment -> re-search,
/// asserting a 2xx status at every step.
pub async fn happy_path(client: &Client, demo: &Path) -> Scenario {
    let session = client.created("/sessions", &json!({})).await["session_id"]
        .as_str()
        .unwrap()
        .to_string();
    let base = format!("/sessions/{session}");
    let csv = std::fs::read(demo.join("collisions.csv")).unwrap();
    let (status, ds) = client.post_raw(&format!("{base}/datasets?name=collisions"), csv).await;
    assert_eq!(status, StatusCode::CREATED, "{ds}");
    assert_eq!(ds["row_count"], curate::demo::DEMO_DAYS);

    let problem = client
        .created(
            &format!("{base}/problems"),
            &json!({"dataset": "collisions", "spec": demo_problem(&["date", "trips"])}),
        )
        .await;
    let p1 = problem["problem_id"].as_str().unwrap().to_string();
    let run = client
        .created(&format!("{base}/problems/{p1}/search"), &json!({"seed": SEARCH_SEED}))
        .await;
    let r1 = run["run_id"].as_str().unwrap().to_string();
    let streamed = client.drain(&session, &r1, Duration::from_millis(20)).await;
    let full = client.ok(&format!("{base}/runs/{r1}/events?cursor=0")).await;
    let replay_matches = Value::Array(streamed.clone()) == full["solutions"];
    assert!(!streamed.is_empty() && streamed.len() <= MAX_PIPELINES);

    let table = client.ok(&format!("{base}/runs/{r1}/solutions?sort=mae")).await;
    let mae_before = best_mae(&table);
    let top = table["rows"][0]["solution_id"].as_str().unwrap().to_string();

    let augment = client.ok(&format!("{base}/datasets/collisions/augment?keywords=weather")).await;
    let candidate = augment["candidates"][0].clone();
    assert_eq!(candidate["candidate_id"], "weather-hourly:temporal_join");
    let joined = client
        .created(&format!("{base}/datasets/collisions/augment/apply"), &json!({"candidate": candidate}))
        .await;
    let joined_name = joined["name"].as_str().unwrap().to_string();
    let features = ["date", "trips", "temperature", "precipitation", "wind_speed"];
    let p2 = client
        .created(
            &format!("{base}/problems"),
            &json!({"dataset": joined_name, "spec": demo_problem(&features)}),
        )
        .await["problem_id"]
        .as_str()
        .unwrap()
        .to_string();
    let r2 = client
        .created(&format!("{base}/problems/{p2}/search"), &json!({"seed": SEARCH_SEED}))
        .await["run_id"]
        .as_str()
        .unwrap()
        .to_string();
    client.drain(&session, &r2, Duration::from_millis(20)).await;
    let table2 = client.ok(&format!("{base}/runs/{r2}/solutions?sort=mae")).await;
    let mae_after = best_mae(&table2);
    let top2 = table2["rows"][0]["solution_id"].as_str().unwrap().to_string();

    let reads = vec![
        base.clone(),
        format!("{base}/datasets/collisions"),
        format!("{base}/datasets/collisions/profile"),
        format!("{base}/datasets/{joined_name}"),
        format!("{base}/problems/{p1}"),
        format!("{base}/problems/{p2}"),
        format!("{base}/runs/{r1}"),
        format!("{base}/runs/{r1}/events?cursor=3"),
        format!("{base}/runs/{r1}/solutions"),
        format!("{base}/runs/{r1}/solutions?sort=r2"),
        format!("{base}/runs/{r1}/summary?metric=mae"),
        format!("{base}/runs/{r1}/parallel"),
        format!("{base}/runs/{r1}/solutions/{top}"),
        format!("{base}/runs/{r1}/solutions/{top}/explain/scatter"),
        format!("{base}/runs/{r1}/solutions/{top}/explain/pdp?feature=trips"),
        format!("{base}/runs/{r2}/solutions/{top2}/explain/pdp?feature=temperature"),
        format!("{base}/runs/{r2}/solutions"),
        format!("{base}/solutions/compare?a={top}&b={top2}"),
        format!("{base}/datasets/collisions/augment?keywords=weather"),
    ];
    for uri in &reads {
        client.ok(uri).await;
    }
    Scenario {
        session,
        reads,
        mae_before,
        mae_after,
        replay_matches,
    }
}

/// Issues every read of `scenario` against `client` and returns the payloads.
pub async fn read_all(client: &Client, scenario: &Scenario) -> Vec<Value> {
    let mut out = Vec::new();
    for uri in &scenario.reads {
        out.push(client.ok(uri).await);
    }
    out
}

pub fn write_demo_dir(dir: &Path) {
    write_demo(dir, DEMO_SEED).expect("demo data writes");
}
