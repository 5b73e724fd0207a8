use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use newscast::config::PipelineConfig;
use newscast::service::{router, AppState, ErrorBody};
use newscast::snapshot::Snapshot;
use newscast::whatif::{whatif, WhatIfResponse};
use newscast_core::articlepred::ArticleInput;
use newscast_core::corpus::generate_synthetic;

const SMALL: &str = r#"
seed = 3
[synth]
k = 4
n_articles = 600
n_days = 150
[topics]
k = 4
iterations = 200
burn_in = 150
"#;

fn snapshot_dir() -> &'static (tempfile::TempDir, PipelineConfig) {
    static DIR: OnceLock<(tempfile::TempDir, PipelineConfig)> = OnceLock::new();
    DIR.get_or_init(|| {
        let config = PipelineConfig::from_toml(SMALL).unwrap();
        let (corpus, _) = generate_synthetic(&config.synth.spec(config.seed)).unwrap();
        let snap = Snapshot::build(corpus, &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        snap.save(&dir.path().join("snap")).unwrap();
        (dir, config)
    })
}

fn load() -> Snapshot {
    Snapshot::load(&snapshot_dir().0.path().join("snap")).unwrap()
}

fn state() -> Arc<AppState> {
    AppState::new(load(), None)
}

async fn call(
    state: &Arc<AppState>,
    method: &str,
    uri: &str,
    body: Option<String>,
) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let ct = resp
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string());
    assert_eq!(ct.as_deref(), Some("application/json"), "{uri}");
    (
        status,
        resp.into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec(),
    )
}

fn error(bytes: &[u8]) -> ErrorBody {
    serde_json::from_slice(bytes).unwrap()
}

fn draft_of(snap: &Snapshot, id: &str) -> Value {
    let (a, _) = snap.corpus.get(id).unwrap();
    json!({"title": a.title, "body": a.body, "planned_date": a.published_at.to_string()})
}

#[tokio::test]
async fn malformed_requests_name_the_field() {
    let s = state();
    let cases = [
        ("", "body"),
        ("{not json", "body"),
        (r#"{"title":"x","planned_date":"2024-03-01"}"#, "body"),
        (r#"{"body":"x y"}"#, "planned_date"),
        (r#"{"body":"x y","planned_date":"March 1"}"#, "planned_date"),
        (
            r#"{"body":"x y","planned_date":"2024-03-01","variant":"EARLY_2h"}"#,
            "variant",
        ),
        (
            r#"{"body":"x y","planned_date":"2024-03-01","extra":1}"#,
            "body",
        ),
    ];
    for (body, field) in cases {
        let (status, bytes) = call(&s, "POST", "/whatif", Some(body.into())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        let e = error(&bytes);
        assert_eq!(e.status, 400);
        assert_eq!(e.field.as_deref(), Some(field), "{body}: {}", e.error);
    }
    let (status, _) = call(&s, "GET", "/topics/x/volume", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, bytes) = call(&s, "GET", "/topics/0/volume?days=0", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error(&bytes).field.as_deref(), Some("days"));
}

#[tokio::test]
async fn unknown_resources_are_404() {
    let s = state();
    for uri in [
        "/articles/nope/prediction-vs-actual",
        "/topics/4/volume",
        "/no/such/route",
        "/articles/a300/prediction-vs-actual?variant=EARLY_1h",
    ] {
        let (status, bytes) = call(&s, "GET", uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(error(&bytes).status, 404);
    }
}

#[tokio::test]
async fn unservable_inputs_are_422() {
    let s = state();
    // before the panel starts, so no lag-day history exists
    let body =
        json!({"title": "t", "body": "some words", "planned_date": "2020-01-01"}).to_string();
    let (status, bytes) = call(&s, "POST", "/whatif", Some(body)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(
        error(&bytes).error.contains("2019-12-31"),
        "{}",
        error(&bytes).error
    );
    let (status, _) = call(&s, "GET", "/articles/a000/prediction-vs-actual", None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn topics_and_volumes() {
    let s = state();
    let (status, bytes) = call(&s, "GET", "/topics", None).await;
    assert_eq!(status, StatusCode::OK);
    let topics: Vec<Value> = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(topics.len(), snapshot_dir().1.topics.k);
    let total: u64 = topics
        .iter()
        .map(|t| t["n_articles"].as_u64().unwrap())
        .sum();
    assert_eq!(total, 600);
    let (status, bytes) = call(&s, "GET", "/topics/2/volume?days=5", None).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["history"].as_array().unwrap().len(), 5);
    assert_eq!(
        v["forecast"].as_array().unwrap().len(),
        snapshot_dir().1.forecast.snapshot_horizon
    );
    let (_, bytes) = call(&s, "GET", "/health", None).await;
    assert_eq!(
        serde_json::from_slice::<Value>(&bytes).unwrap()["status"],
        "ok"
    );
    let (_, bytes) = call(&s, "GET", "/snapshot", None).await;
    assert_eq!(serde_json::from_slice::<Value>(&bytes).unwrap()["k"], 4);
}

#[tokio::test]
async fn prediction_vs_actual_reports_the_error() {
    let s = state();
    let (status, bytes) = call(
        &s,
        "GET",
        "/articles/a300/prediction-vs-actual?variant=NN_T",
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["variant"], "NN_T");
    let actual = v["actual_visits"].as_f64().unwrap();
    let predicted = v["predicted_visits"].as_f64().unwrap();
    let ape = v["ape"].as_f64().unwrap();
    assert!((ape - 100.0 * (predicted - actual).abs() / actual).abs() < 1e-9);
}

/// The service and the one-shot path share the same code and the same
/// serialization, so the bytes agree.
#[tokio::test]
async fn whatif_matches_the_one_shot_prediction() {
    let s = state();
    let snap = s.current();
    let draft = draft_of(&snap, "a300");
    let (status, bytes) = call(&s, "POST", "/whatif", Some(draft.to_string())).await;
    assert_eq!(
        status,
        StatusCode::OK,
        "{}",
        String::from_utf8_lossy(&bytes)
    );
    let http: WhatIfResponse = serde_json::from_slice(&bytes).unwrap();
    let direct = whatif(&snap, &ArticleInput::Stored("a300".into()), None).unwrap();
    assert_eq!(
        http.predicted_visits.to_bits(),
        direct.predicted_visits.to_bits()
    );
    assert_eq!(http.components, direct.components);
    assert_eq!(http.variant, "NN_T_PT");
    assert!(http
        .neighbors
        .windows(2)
        .all(|w| w[0].similarity >= w[1].similarity));
    assert!(http.neighbors.len() <= snap.meta.config.serve.max_neighbors);
    assert_eq!(http.topic_forecast.len(), http.horizon);
}

#[tokio::test]
async fn reloaded_snapshots_answer_identically() {
    let fresh = state();
    let snap = fresh.current();
    let dir = tempfile::tempdir().unwrap();
    snap.save(&dir.path().join("copy")).unwrap();
    let copy = AppState::new(Snapshot::load(&dir.path().join("copy")).unwrap(), None);
    let body = draft_of(&snap, "a450").to_string();
    for variant in ["NN", "T", "NN_T", "NN_T_PT"] {
        let uri = format!("/articles/a450/prediction-vs-actual?variant={variant}");
        assert_eq!(
            call(&fresh, "GET", &uri, None).await,
            call(&copy, "GET", &uri, None).await
        );
    }
    assert_eq!(
        call(&fresh, "POST", "/whatif", Some(body.clone())).await,
        call(&copy, "POST", "/whatif", Some(body)).await
    );
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_get_identical_answers() {
    let s = state();
    let body = draft_of(&s.current(), "a300").to_string();
    let tasks: Vec<_> = (0..16)
        .map(|_| {
            let s = s.clone();
            let b = body.clone();
            tokio::spawn(async move { call(&s, "POST", "/whatif", Some(b)).await })
        })
        .collect();
    let mut answers = Vec::new();
    for t in tasks {
        answers.push(t.await.unwrap());
    }
    assert_eq!(answers[0].0, StatusCode::OK);
    assert!(answers.iter().all(|a| *a == answers[0]));
}

#[tokio::test]
async fn replacing_the_snapshot_keeps_held_references() {
    let s = state();
    let held = s.current();
    let mut config = snapshot_dir().1.clone();
    config.seed = 11;
    config.topics.k = 3;
    let (corpus, _) = generate_synthetic(&config.synth.spec(config.seed)).unwrap();
    s.replace(Snapshot::build(corpus, &config).unwrap());
    assert_eq!(held.meta.k, 4);
    assert!(whatif(&held, &ArticleInput::Stored("a300".into()), None).is_ok());
    let (_, bytes) = call(&s, "GET", "/topics", None).await;
    assert_eq!(
        serde_json::from_slice::<Vec<Value>>(&bytes).unwrap().len(),
        3
    );
}
