use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use chrono::{DateTime, TimeZone, Utc};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use sentinel_core::config::EngineConfig;
use sentinel_core::dataset::{generate_synthetic, SyntheticConfig};
use sentinel_core::features::FixtureProvider;
use sentinel_core::models::{train_ensemble, Ensemble};
use sentinel_core::reputation::{ReputationStore, Source, DEFAULT_TTL_SECONDS};
use sentinel_core::scoring::Verdict;
use sentinel_service::{router, AppState};

const SAFE_URL: &str = "https://docs.example.org/guide/intro";
const SAFE_HTML: &str = r#"<html><head><title>Guide</title><script src="/app.js"></script></head>
<body><a href="/guide/next">Next</a><a href="/about">About</a><p>Welcome.</p></body></html>"#;

fn bundle() -> Ensemble {
    static BUNDLE: OnceLock<Ensemble> = OnceLock::new();
    BUNDLE
        .get_or_init(|| {
            let ds = generate_synthetic(&SyntheticConfig::default()).unwrap();
            train_ensemble(&ds, &EngineConfig::default().models, 42).unwrap()
        })
        .clone()
}

fn now() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2026, 1, 1, 12, 0, 0).unwrap()
}

fn provider() -> FixtureProvider {
    FixtureProvider::from_json(
        r#"{"example.org": {"created_date": "2004-03-01", "cert_valid": true, "cert_expiry": "2026-09-01"}}"#,
    )
    .unwrap()
}

fn state_with(bundle: Option<Ensemble>, store: ReputationStore) -> Arc<AppState> {
    let state = AppState::new(
        EngineConfig::default(),
        bundle,
        Arc::new(store),
        Arc::new(provider()),
    )
    .unwrap()
    .with_clock(Arc::new(now));
    Arc::new(state)
}

fn state() -> Arc<AppState> {
    state_with(Some(bundle()), ReputationStore::new(DEFAULT_TTL_SECONDS))
}

async fn call(
    state: &Arc<AppState>,
    method: &str,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn analyze(state: &Arc<AppState>, body: Value) -> (StatusCode, Value) {
    call(state, "POST", "/api/v1/analyze", Some(body)).await
}

#[tokio::test]
async fn second_analyze_is_cached_without_evaluation() {
    let s = state();
    let (status, first) = analyze(&s, json!({"url": SAFE_URL, "html": SAFE_HTML})).await;
    assert_eq!(status, StatusCode::OK, "{first}");
    assert_eq!(first["cached"], false);
    assert_eq!(s.evaluations(), 1);

    let (_, second) = analyze(
        &s,
        json!({"url": "HTTPS://Docs.Example.org:443/guide/intro#top"}),
    )
    .await;
    assert_eq!(second["cached"], true);
    assert_eq!(second["score"], first["score"]);
    assert_eq!(second["verdict"], first["verdict"]);
    assert_eq!(second["explanation"], first["explanation"]);
    assert_eq!(s.evaluations(), 1);
}

#[tokio::test]
async fn force_reevaluates() {
    let s = state();
    analyze(&s, json!({"url": SAFE_URL})).await;
    let (_, v) = call(
        &s,
        "POST",
        "/api/v1/analyze?force=true",
        Some(json!({"url": SAFE_URL})),
    )
    .await;
    assert_eq!(v["cached"], false);
    assert_eq!(s.evaluations(), 2);
}

#[tokio::test]
async fn seed_list_danger_without_bundle() {
    let store = ReputationStore::new(DEFAULT_TTL_SECONDS);
    store
        .upsert(
            "http://paypa1-login.tk/verify",
            95.0,
            Verdict::Danger,
            Source::SeedList,
            now().timestamp(),
        )
        .unwrap();
    let s = state_with(None, store);
    let (status, v) = analyze(&s, json!({"url": "http://PAYPA1-LOGIN.tk/verify"})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["verdict"], "danger");
    assert_eq!(v["alert"], true);
    assert_eq!(v["cached"], true);
    assert_eq!(v["model_outputs"], Value::Null);
    assert_eq!(s.evaluations(), 0);
}

#[tokio::test]
async fn miss_without_bundle_is_unavailable() {
    let s = state_with(None, ReputationStore::new(DEFAULT_TTL_SECONDS));
    let (status, v) = analyze(&s, json!({"url": SAFE_URL})).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(v["error_code"], "bundle_not_loaded");
    let (_, h) = call(&s, "GET", "/api/v1/health", None).await;
    assert_eq!(h["status"], "degraded");
    assert_eq!(h["bundle_loaded"], false);
}

#[tokio::test]
async fn malformed_url_is_rejected() {
    let s = state();
    let (status, v) = analyze(&s, json!({"url": "not a url"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error_code"], "malformed_url");
    let (status, v) = analyze(&s, json!({"url": "ftp://example.org/file"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error_code"], "unsupported_scheme");
}

#[tokio::test]
async fn schema_violations_are_422() {
    let s = state();
    let (status, v) = analyze(&s, json!({"url": SAFE_URL, "extra": 1})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error_code"], "schema_violation");
    let (status, _) = analyze(&s, json!({"html": "<p>"})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    analyze(&s, json!({"url": SAFE_URL, "session_id": "t1"})).await;
    let event =
        json!({"kind": "form_submit", "timestamp_ms": 5, "fields": {"password": "hunter2"}});
    let (status, _) = call(&s, "POST", "/api/v1/sessions/t1/events", Some(event)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let event = json!({"kind": "keypress", "timestamp_ms": 5});
    let (status, _) = call(&s, "POST", "/api/v1/sessions/t1/events", Some(event)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn unknown_session_is_404() {
    let s = state();
    let (status, v) = call(&s, "GET", "/api/v1/sessions/nope/score", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error_code"], "unknown_session");
    let (status, _) = call(
        &s,
        "POST",
        "/api/v1/sessions/nope/events",
        Some(json!({"kind": "click", "timestamp_ms": 1})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn hidden_redirect_escalates_to_danger() {
    let s = state();
    let (_, first) = analyze(
        &s,
        json!({"url": SAFE_URL, "html": SAFE_HTML, "session_id": "tab-1"}),
    )
    .await;
    assert_eq!(first["verdict"], "safe", "{first}");

    let nav = json!({"kind": "navigation", "timestamp_ms": 1000});
    call(&s, "POST", "/api/v1/sessions/tab-1/events", Some(nav)).await;
    let redirect = json!({"kind": "redirect", "timestamp_ms": 1200, "target_host": "evil.tk", "cross_origin": true});
    let (status, v) = call(&s, "POST", "/api/v1/sessions/tab-1/events", Some(redirect)).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert!(v["score"].as_f64().unwrap() >= 70.0);
    assert_eq!(v["verdict"], "danger");
    assert_eq!(v["alert"], true);
    assert_eq!(v["event_count"], 2);

    let (_, scored) = call(&s, "GET", "/api/v1/sessions/tab-1/score", None).await;
    assert_eq!(scored["score"], v["score"]);

    // The escalation is recorded for later visitors.
    let (_, again) = analyze(&s, json!({"url": SAFE_URL})).await;
    assert_eq!(again["cached"], true);
    assert_eq!(again["verdict"], "danger");
}

#[tokio::test]
async fn duplicate_events_are_ignored() {
    let s = state();
    analyze(&s, json!({"url": SAFE_URL, "session_id": "tab-2"})).await;
    let click = json!({"kind": "click", "timestamp_ms": 10});
    let (_, a) = call(
        &s,
        "POST",
        "/api/v1/sessions/tab-2/events",
        Some(click.clone()),
    )
    .await;
    let evals = s.evaluations();
    let (_, b) = call(&s, "POST", "/api/v1/sessions/tab-2/events", Some(click)).await;
    assert_eq!(a["duplicate"], false);
    assert_eq!(b["duplicate"], true);
    assert_eq!(b["event_count"], 1);
    assert_eq!(s.evaluations(), evals);
}

#[tokio::test]
async fn health_and_model_info() {
    let s = state();
    let (status, h) = call(&s, "GET", "/api/v1/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(h["status"], "ok");
    let (_, info) = call(&s, "GET", "/api/v1/models/info", None).await;
    assert_eq!(info["manifest_size"], 35);
    assert_eq!(info["training_seed"], 42);
    assert_eq!(info["manifest"][0], "url_length");
}

#[tokio::test]
async fn journal_never_holds_page_content() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.jsonl");
    let (store, corrupt) =
        ReputationStore::open(&path, DEFAULT_TTL_SECONDS, now().timestamp()).unwrap();
    assert!(corrupt.is_empty());
    let s = state_with(Some(bundle()), store);
    let html = r#"<form action="https://collect.tk/x"><input type="password" name="pw" value="hunter2"></form>"#;
    analyze(
        &s,
        json!({"url": SAFE_URL, "html": html, "session_id": "p"}),
    )
    .await;
    let submit = json!({
        "kind": "form_submit", "timestamp_ms": 50, "target_host": "collect.tk",
        "cross_origin": true, "fields": {"field_count": 2, "password_field_count": 1}
    });
    call(&s, "POST", "/api/v1/sessions/p/events", Some(submit)).await;
    let journal = std::fs::read_to_string(&path).unwrap();
    assert!(!journal.is_empty());
    for needle in [
        "hunter2",
        "<form",
        "password",
        "explanation",
        "model_outputs",
    ] {
        assert!(!journal.contains(needle), "journal contains {needle}");
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_stay_consistent() {
    let s = state();
    analyze(&s, json!({"url": SAFE_URL, "session_id": "c"})).await;
    let mut handles = Vec::new();
    for i in 0..64i64 {
        let s = s.clone();
        handles.push(tokio::spawn(async move {
            if i % 2 == 0 {
                let ev = json!({"kind": "request", "timestamp_ms": i, "target_host": format!("cdn{i}.net")});
                call(&s, "POST", "/api/v1/sessions/c/events", Some(ev)).await.0
            } else {
                analyze(&s, json!({"url": format!("https://site{}.example.org/", i % 5)})).await.0
            }
        }));
    }
    for h in handles {
        assert_eq!(h.await.unwrap(), StatusCode::OK);
    }
    let (_, v) = call(&s, "GET", "/api/v1/sessions/c/score", None).await;
    assert_eq!(v["event_count"], 32);
    // Five distinct URLs plus the session page; each evaluated at least once.
    assert_eq!(s.store().len(), 6);
}
