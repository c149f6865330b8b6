mod common;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use polyrec_trials::router;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let res = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = res.status();
    (
        status,
        res.into_body().collect().await.unwrap().to_bytes().to_vec(),
    )
}

async fn json_call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

#[tokio::test]
async fn full_session_over_http() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = common::dataset(&tmp.path().join("ds"));
    let store = common::store(manifest.clone(), &tmp.path().join("log.jsonl"));
    let app = router(store);

    let (status, created) = json_call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"exposure_ms": 100, "length": 4, "seed": 7, "filter": {"kinds": ["edge", "corner"]}})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["session_id"].as_str().unwrap().to_string();
    assert_eq!(created["length"], 4);

    for i in 0..4 {
        let (status, next) = json_call(&app, Method::GET, &format!("/sessions/{id}/next"), None).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(next["status"], "stimulus");
        assert_eq!(next["index"], i);
        assert_eq!(next["exposure_ms"], 100);
        let text = next.to_string();
        assert!(!text.contains("class_label") && !text.contains("path") && !text.contains("polygon"));
        let image_id = next["image_id"].as_str().unwrap().to_string();

        let (status, png) = call(&app, Method::GET, next["image_url"].as_str().unwrap(), None).await;
        assert_eq!(status, StatusCode::OK);
        assert!(png.starts_with(b"\x89PNG"));

        let truth = manifest.get(&image_id).unwrap().class_label;
        let submit = json!({"image_id": image_id, "chosen_label": truth, "response_ms": 512.5});
        let uri = format!("/sessions/{id}/responses");
        let (status, ack) = json_call(&app, Method::POST, &uri, Some(submit.clone())).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(ack["remaining"], 3 - i);
        let (status, _) = json_call(&app, Method::POST, &uri, Some(submit)).await;
        assert_eq!(status, StatusCode::CONFLICT);
    }
    let (_, end) = json_call(&app, Method::GET, &format!("/sessions/{id}/next"), None).await;
    assert_eq!(end, json!({"status": "end", "total": 4}));

    let (status, csv) = call(&app, Method::GET, &format!("/export?session={id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    let csv = String::from_utf8(csv).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.contains(&format!("512.5,human:{id}")));
}

#[tokio::test]
async fn error_statuses() {
    let tmp = tempfile::tempdir().unwrap();
    let store = common::store(
        common::dataset(&tmp.path().join("ds")),
        &tmp.path().join("log.jsonl"),
    );
    let app = router(store);

    assert_eq!(
        call(&app, Method::GET, "/sessions/missing/next", None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        call(&app, Method::GET, "/images/missing", None).await.0,
        StatusCode::NOT_FOUND
    );
    let (status, body) = json_call(&app, Method::POST, "/sessions", Some(json!({"exposure_ms": 123}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("exposure_ms"));
    let (status, _) = json_call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"exposure_ms": 200, "filter": {"classes": [9]}})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (_, created) = json_call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"exposure_ms": 750, "seed": 1})),
    )
    .await;
    let id = created["session_id"].as_str().unwrap();
    let (_, next) = json_call(&app, Method::GET, &format!("/sessions/{id}/next"), None).await;
    let uri = format!("/sessions/{id}/responses");
    let bad_label = json!({"image_id": next["image_id"], "chosen_label": 12, "response_ms": 1.0});
    assert_eq!(
        json_call(&app, Method::POST, &uri, Some(bad_label)).await.0,
        StatusCode::BAD_REQUEST
    );
    let stale = json!({"image_id": "not-current", "chosen_label": 3, "response_ms": 1.0});
    assert_eq!(
        json_call(&app, Method::POST, &uri, Some(stale)).await.0,
        StatusCode::CONFLICT
    );

    let (status, csv) = call(&app, Method::GET, "/export?session=", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1);
}

#[tokio::test]
async fn cors_preflight_is_answered() {
    let tmp = tempfile::tempdir().unwrap();
    let app = router(common::store(
        common::dataset(&tmp.path().join("ds")),
        &tmp.path().join("log.jsonl"),
    ));
    let req = Request::builder()
        .method(Method::OPTIONS)
        .uri("/sessions")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let res = app.oneshot(req).await.unwrap();
    assert!(res.headers().contains_key(header::ACCESS_CONTROL_ALLOW_ORIGIN));
}
