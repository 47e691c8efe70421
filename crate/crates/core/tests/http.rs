use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use pact_core::corpus;
use pact_core::gateway::{router, AppState, FileStore};
use pact_core::norm::{Event, PropId};
use pact_core::parse;

fn app(dir: &tempfile::TempDir) -> Router {
    router(AppState::new(FileStore::open(dir.path()).unwrap()))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<String>, key: Option<&str>) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(k) = key {
        req = req.header("idempotency-key", k);
    }
    let req = req.body(body.map(Body::from).unwrap_or_else(Body::empty)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn json_call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, text) = call(app, method, uri, body.map(|b| b.to_string()), None).await;
    (status, serde_json::from_str(&text).unwrap_or(Value::Null))
}

async fn contract(app: &Router, src: &str) -> String {
    let (status, text) = call(app, "POST", "/contracts", Some(src.to_string()), None).await;
    assert_eq!(status, StatusCode::CREATED, "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    v["id"].as_str().unwrap().to_string()
}

async fn session(app: &Router, contract_id: &str) -> String {
    let (status, v) = json_call(app, "POST", "/sessions", Some(json!({ "contract_id": contract_id, "epoch": 0 }))).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

fn delivery(at: u64) -> Value {
    let spec = parse(corpus::PIZZA_TIMED).unwrap();
    let attrs = spec.proposition(&PropId::new("alpha")).unwrap().attrs.clone();
    serde_json::to_value(Event::perform(at, "s", "alpha", attrs)).unwrap()
}

#[tokio::test]
async fn health() {
    let dir = tempfile::tempdir().unwrap();
    let (status, v) = json_call(&app(&dir), "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["status"], "ok");
}

#[tokio::test]
async fn late_delivery_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir);
    let cid = contract(&app, corpus::PIZZA_TIMED).await;
    let sid = session(&app, &cid).await;

    let (status, v) = json_call(&app, "GET", &format!("/sessions/{sid}/state"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["norms"][0]["text"], "O(s, alpha)");
    assert_eq!(v["norms"][0]["deadline"], 30);

    let (status, v) = json_call(&app, "POST", &format!("/sessions/{sid}/events"), Some(delivery(45))).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["records"].as_array().unwrap().len(), 1);
    let texts: Vec<&str> = v["state"]["norms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n["text"].as_str().unwrap())
        .collect();
    assert_eq!(texts, ["O(p, beta)"]);

    let (_, h) = json_call(&app, "GET", &format!("/sessions/{sid}/history"), None).await;
    assert_eq!(h["records"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn contract_views() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir);
    let cid = contract(&app, corpus::PIZZA_SIMPLE).await;
    let (status, v) = json_call(&app, "GET", &format!("/contracts/{cid}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["name"], "pizza_simple");
    let (_, g) = json_call(&app, "GET", &format!("/contracts/{cid}/graph"), None).await;
    assert_eq!(g["nodes"].as_array().unwrap().len(), 5);
    let (status, dot) = call(&app, "GET", &format!("/contracts/{cid}/graph?format=dot"), None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(dot.starts_with("digraph"));
    let (status, _) = call(&app, "GET", &format!("/contracts/{cid}/graph?format=svg"), None, None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (_, a) = json_call(&app, "GET", &format!("/contracts/{cid}/analysis"), None).await;
    assert_eq!(a["ctd"].as_array().unwrap().len(), 1);
    // Same normalised contract, same id.
    assert_eq!(contract(&app, &format!("# again\n{}", corpus::PIZZA_SIMPLE)).await, cid);
}

#[tokio::test]
async fn explore_one_step() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir);
    let cid = contract(&app, corpus::PIZZA_SIMPLE).await;
    let sid = session(&app, &cid).await;
    let (status, v) = json_call(&app, "POST", &format!("/sessions/{sid}/explore"), Some(json!({ "depth": 1 }))).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["tree"]["children"].as_array().unwrap().len(), 2);
    assert!(v.get("what_if").is_none());

    let (_, v) = json_call(
        &app,
        "POST",
        &format!("/sessions/{sid}/explore"),
        Some(json!({ "events": [{ "type": "tick", "at": 5 }] })),
    )
    .await;
    assert_eq!(v["what_if"]["clock"], 5);
    // Exploring never touches the live session.
    let (_, s) = json_call(&app, "GET", &format!("/sessions/{sid}/state"), None).await;
    assert_eq!(s["clock"], 0);

    let (status, _) = json_call(&app, "POST", &format!("/sessions/{sid}/explore"), Some(json!({ "depth": 99 }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn error_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir);
    let (status, v) = json_call(&app, "GET", "/contracts/deadbeef", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "not_found");
    let (status, _) = json_call(&app, "GET", "/sessions/deadbeef/state", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, text) = call(&app, "POST", "/contracts", Some("contract x\nagents s\ninitially O(q, a)\n".into()), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!(!v["diagnostics"].as_array().unwrap().is_empty());

    let cid = contract(&app, corpus::PIZZA_TIMED).await;
    let sid = session(&app, &cid).await;
    let events = format!("/sessions/{sid}/events");
    let (status, _) = call(&app, "POST", &events, Some("{not json".into()), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, v) = json_call(&app, "POST", &events, Some(json!({ "type": "action", "at": 1, "actor": "s", "act": { "kind": "perform", "prop": "phi" } }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "unexpected_event");

    json_call(&app, "POST", &events, Some(delivery(20))).await;
    let (status, v) = json_call(&app, "POST", &events, Some(json!({ "type": "tick", "at": 10 }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"]["code"], "stale_timestamp");

    let (_, h) = json_call(&app, "GET", &format!("/sessions/{sid}/history"), None).await;
    assert_eq!(h["rejected"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn terminated_session_conflicts() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir);
    let cid = contract(&app, corpus::PIZZA_SIMPLE).await;
    let sid = session(&app, &cid).await;
    let (status, v) = json_call(&app, "POST", &format!("/sessions/{sid}/clock"), Some(json!({ "to": 100 }))).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    // pizza_simple has no deadlines, so nothing lapses.
    assert!(v["records"].as_array().unwrap().is_empty());

    let timed = contract(&app, corpus::PIZZA_TIMED).await;
    let sid = session(&app, &timed).await;
    let (_, v) = json_call(&app, "POST", &format!("/sessions/{sid}/clock"), Some(json!({ "to": 31 }))).await;
    assert_eq!(v["records"][0]["cause"]["kind"], "lapse");
    assert_eq!(v["state"]["key"], "{O(s, phi)}");
    let pay = json!({ "type": "action", "at": 40, "actor": "s", "act": { "kind": "perform", "prop": "phi" } });
    json_call(&app, "POST", &format!("/sessions/{sid}/events"), Some(pay)).await;
    let pay = json!({ "type": "action", "at": 50, "actor": "p", "act": { "kind": "perform", "prop": "beta" }, "attrs": { "amount": { "amount": "12.95" } } });
    let (status, v) = json_call(&app, "POST", &format!("/sessions/{sid}/events"), Some(pay)).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let (_, s) = json_call(&app, "GET", &format!("/sessions/{sid}/state"), None).await;
    assert_eq!(s["terminated"], "happy");
    let (status, v) = json_call(&app, "POST", &format!("/sessions/{sid}/events"), Some(json!({ "type": "tick", "at": 2_000 }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"]["code"], "session_terminated");
}

#[tokio::test]
async fn idempotent_retries() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir);
    let cid = contract(&app, corpus::PIZZA_TIMED).await;
    let sid = session(&app, &cid).await;
    let uri = format!("/sessions/{sid}/events");
    let body = delivery(20).to_string();
    let (a_status, a) = call(&app, "POST", &uri, Some(body.clone()), Some("k-1")).await;
    let (b_status, b) = call(&app, "POST", &uri, Some(body), Some("k-1")).await;
    assert_eq!((a_status, b_status), (StatusCode::OK, StatusCode::OK));
    assert_eq!(a, b);
    let (_, h) = json_call(&app, "GET", &format!("/sessions/{sid}/history"), None).await;
    assert_eq!(h["records"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn sessions_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (cid, sid) = {
        let app = app(&dir);
        let cid = contract(&app, corpus::PIZZA_TIMED).await;
        let sid = session(&app, &cid).await;
        json_call(&app, "POST", &format!("/sessions/{sid}/events"), Some(delivery(45))).await;
        (cid, sid)
    };
    let app = app(&dir);
    let (status, s) = json_call(&app, "GET", &format!("/sessions/{sid}/state"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(s["contract_id"], cid.as_str());
    assert_eq!(s["key"], "{O(p, beta)}");
    assert_eq!(s["clock"], 45);
    let (status, _) = json_call(&app, "GET", &format!("/contracts/{cid}/graph"), None).await;
    assert_eq!(status, StatusCode::OK);
}
