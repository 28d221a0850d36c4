//! HTTP session service, driven in-process.

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use pcskel::io::server::{router, Shared};
use serde_json::{json, Value};
use tower::ServiceExt;

const SQUARE: &str = r#"{"loops":[[[0,0],[1,0],[1,1],[0,1]]]}"#;

async fn call(app: &Router, method: Method, uri: &str, body: Option<String>) -> (StatusCode, String, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let mime = resp
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, mime, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let (s, _, text) = call(app, Method::POST, uri, Some(body.to_string())).await;
    (s, serde_json::from_str(&text).unwrap())
}

async fn new_square(app: &Router) -> String {
    let (s, _, text) = call(app, Method::POST, "/sessions", Some(SQUARE.into())).await;
    assert_eq!(s, StatusCode::CREATED, "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["state"]["status"], "running");
    v["id"].as_str().unwrap().to_string()
}

fn app() -> Router {
    router(Shared::default())
}

#[tokio::test]
async fn step_stops_at_termination() {
    let app = app();
    let id = new_square(&app).await;
    let (s, r) = post(&app, &format!("/sessions/{id}/step"), json!({"dz": 0.2})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(r["advanced_dz"], 0.2);
    let (_, r) = post(&app, &format!("/sessions/{id}/step"), json!({"dz": 0.4})).await;
    assert!((r["advanced_dz"].as_f64().unwrap() - 0.3).abs() < 1e-12);
    assert_eq!(r["status"], "terminated");
    let (s, r) = post(&app, &format!("/sessions/{id}/step"), json!({"dz": 0.1})).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert!(r["error"].as_str().unwrap().contains("not running"));

    let (s, _, text) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    let state: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(state["z"], 0.5);
    assert_eq!(state["journal_len"], 2);
    let kinds: Vec<&str> = state["skeleton"]["nodes"].as_array().unwrap().iter().map(|n| n["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds.iter().filter(|&&k| k == "collapse").count(), 1);
}

#[tokio::test]
async fn pause_at_event_halts_at_collapse() {
    let app = app();
    let id = new_square(&app).await;
    let (_, r) = post(&app, &format!("/sessions/{id}/step"), json!({"dz": 1.0, "pause_at_event": true})).await;
    assert_eq!(r["z"], 0.5);
    assert_eq!(r["events"], 1);
}

#[tokio::test]
async fn stationary_edit_freezes_edge() {
    let app = app();
    let id = new_square(&app).await;
    post(&app, &format!("/sessions/{id}/step"), json!({"dz": 0.1})).await;
    let edit = json!({"set_alpha": {"loop": 0, "edge": 0, "alpha": std::f64::consts::FRAC_PI_2}});
    let (s, r) = post(&app, &format!("/sessions/{id}/edit"), edit).await;
    assert_eq!(s, StatusCode::OK, "{r}");
    let (_, r) = post(&app, &format!("/sessions/{id}/step"), json!({"dz": 0.1})).await;
    assert_eq!(r["status"], "running");
    let (_, _, text) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    let state: Value = serde_json::from_str(&text).unwrap();
    let vs = state["loops"][0]["vertices"].as_array().unwrap();
    // the edge after the first vertex stays on y = 0.1
    let ys: Vec<f64> = vs.iter().map(|v| v["pos"][1].as_f64().unwrap()).collect();
    assert_eq!(ys.iter().filter(|&&y| (y - 0.1).abs() < 1e-12).count(), 2, "{ys:?}");
}

#[tokio::test]
async fn undo_restores_export() {
    let app = app();
    let id = new_square(&app).await;
    post(&app, &format!("/sessions/{id}/step"), json!({"dz": 0.1})).await;
    let export = format!("/sessions/{id}/export?format=json");
    let (_, _, before) = call(&app, Method::GET, &export, None).await;
    let edit = json!({"set_alpha": {"loop": 0, "edge": 1, "alpha": 1.2}});
    assert_eq!(post(&app, &format!("/sessions/{id}/edit"), edit).await.0, StatusCode::OK);
    let (_, _, edited) = call(&app, Method::GET, &export, None).await;
    assert_ne!(before, edited);
    let (s, state) = post(&app, &format!("/sessions/{id}/undo"), json!({})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(state["journal_len"], 1);
    let (_, _, after) = call(&app, Method::GET, &export, None).await;
    assert_eq!(before, after);
    post(&app, &format!("/sessions/{id}/undo"), json!({})).await;
    let (s, _) = post(&app, &format!("/sessions/{id}/undo"), json!({})).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn export_formats() {
    let app = app();
    let id = new_square(&app).await;
    post(&app, &format!("/sessions/{id}/step"), json!({"dz": 1.0})).await;
    let (s, mime, body) = call(&app, Method::GET, &format!("/sessions/{id}/export"), None).await;
    assert_eq!((s, mime.as_str()), (StatusCode::OK, "application/json"));
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["faces"].as_array().unwrap().len(), 4);
    let (_, mime, body) = call(&app, Method::GET, &format!("/sessions/{id}/export?format=svg"), None).await;
    assert_eq!(mime, "image/svg+xml");
    assert!(body.starts_with("<svg"));
    let (_, mime, body) = call(&app, Method::GET, &format!("/sessions/{id}/export?format=obj"), None).await;
    assert!(mime.starts_with("text/plain"));
    assert_eq!(body.lines().filter(|l| l.starts_with("f ")).count(), 4);
    let (s, _, _) = call(&app, Method::GET, &format!("/sessions/{id}/export?format=png"), None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn error_statuses() {
    let app = app();
    let (s, _, body) = call(&app, Method::POST, "/sessions", Some(r#"{"loops":[[[0,0],[1,0]]]}"#.into())).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body.contains("loops[0]"), "{body}");
    let (s, _, _) = call(&app, Method::POST, "/sessions", Some("not json".into())).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _, _) = call(&app, Method::GET, "/sessions/s99", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = post(&app, "/sessions/s99/step", json!({"dz": 0.1})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let id = new_square(&app).await;
    let (s, _) = post(&app, &format!("/sessions/{id}/step"), json!({"dz": -1.0})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = post(&app, &format!("/sessions/{id}/step"), json!({"height": 1.0})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let edit = json!({"set_alpha": {"loop": 0, "edge": 0, "alpha": 4.0}});
    assert_eq!(post(&app, &format!("/sessions/{id}/edit"), edit).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = post(&app, &format!("/sessions/{id}/undo"), json!({})).await;
    assert_eq!(s, StatusCode::CONFLICT);
}
