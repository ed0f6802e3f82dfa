#![allow(dead_code)]

use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use dipaint::service::wire::{encode_b64, CreateSession, FrameKind, FrameMessage, PaintStarted, SessionCreated};
use dipaint_core::script::{Action, Script};
use dipaint_core::Image;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub fn content_image() -> Image {
    Image::from_fn(40, 48, |r, c| {
        let (y, x) = (r as f64 / 40.0, c as f64 / 48.0);
        let disc = if (x - 0.3).powi(2) + (y - 0.5).powi(2) < 0.04 { 0.3 } else { 0.0 };
        [0.25 + 0.4 * x, 0.3 + disc, 0.6 - 0.3 * y]
    })
    .unwrap()
}

pub fn style_image(seed: usize) -> Image {
    let f = 3.0 + seed as f64;
    Image::from_fn(32, 32, |r, c| {
        let (y, x) = (r as f64 / 32.0, c as f64 / 32.0);
        let stripes = 0.5 + 0.5 * (f * 6.0 * (x + y)).sin();
        [0.2 + 0.5 * stripes, 0.5 - 0.2 * x + 0.05 * seed as f64, 0.3 + 0.4 * y * stripes]
    })
    .unwrap()
}

/// The fixed six-action script: two dips (one combined), three paints, one undo.
pub fn six_action_script() -> Value {
    json!({
        "content": "content.png",
        "styles": ["style0.png", "style1.png"],
        "params": {"v": 1.0, "r": 10.0, "epsilon": 0.01, "alpha": 0.7, "dt": 1.0},
        "actions": [
            {"op": "dip", "targets": [{"style": 0, "pixels": [[8, 8], [8, 9], [9, 9]]}]},
            {"op": "paint", "pixels": [[20, 14]], "mode": "auto"},
            {"op": "dip", "targets": [{"style": 0, "pixels": "whole"}, {"style": 1, "pixels": [[20, 20]]}]},
            {"op": "paint", "pixels": [[5, 40], [6, 40], [7, 41], [8, 42]], "mode": "manual", "steps": 6},
            {"op": "paint", "pixels": [[35, 10]], "mode": "auto"},
            {"op": "undo"}
        ]
    })
}

/// Writes the fixture images and `script` into `dir`; returns the script path.
pub fn write_fixture(dir: &Path, script: &Value) -> PathBuf {
    content_image().save(dir.join("content.png")).unwrap();
    style_image(0).save(dir.join("style0.png")).unwrap();
    style_image(1).save(dir.join("style1.png")).unwrap();
    let path = dir.join("script.json");
    std::fs::write(&path, serde_json::to_vec_pretty(script).unwrap()).unwrap();
    path
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<Vec<u8>>) -> (StatusCode, Vec<u8>) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn call_json(app: &Router, method: Method, uri: &str, body: &Value) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, Some(serde_json::to_vec(body).unwrap())).await;
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

pub fn parse_frames(bytes: &[u8]) -> Vec<FrameMessage> {
    bytes
        .split(|b| *b == b'\n')
        .filter(|line| !line.is_empty())
        .map(|line| serde_json::from_slice(line).unwrap())
        .collect()
}

pub async fn create(app: &Router, content: &Image, styles: &[Image], params: Value) -> String {
    let req = CreateSession {
        content: encode_b64(&content.encode_png().unwrap()),
        styles: styles.iter().map(|s| encode_b64(&s.encode_png().unwrap())).collect(),
        params: serde_json::from_value(params).unwrap(),
        backend: dipaint_core::BackendKind::Analytic,
    };
    let (status, value) = call_json(app, Method::POST, "/sessions", &serde_json::to_value(req).unwrap()).await;
    assert_eq!(status, StatusCode::CREATED, "{value}");
    serde_json::from_value::<SessionCreated>(value).unwrap().id
}

/// Starts a paint, attaches its stream and reads it to the end.
pub async fn paint_to_end(app: &Router, id: &str, body: &Value) -> Vec<FrameMessage> {
    let (status, value) = call_json(app, Method::POST, &format!("/sessions/{id}/paint"), body).await;
    assert_eq!(status, StatusCode::ACCEPTED, "{value}");
    let paint = serde_json::from_value::<PaintStarted>(value).unwrap().paint;
    let (status, bytes) = call(app, Method::GET, &format!("/sessions/{id}/paint/{paint}/stream"), None).await;
    assert_eq!(status, StatusCode::OK);
    let frames = parse_frames(&bytes);
    assert_eq!(frames.last().map(|f| f.kind), Some(FrameKind::Terminal));
    frames
}

/// Replays a script over HTTP and returns the exported PNG bytes.
pub async fn replay_over_http(app: &Router, dir: &Path, script: &Script) -> Vec<u8> {
    let content = Image::open(dir.join(&script.content)).unwrap();
    let styles: Vec<_> = script.styles.iter().map(|s| Image::open(dir.join(s)).unwrap()).collect();
    let id = create(app, &content, &styles, serde_json::to_value(&script.params).unwrap()).await;
    for action in &script.actions {
        match action {
            Action::Dip { targets } => {
                let (status, value) =
                    call_json(app, Method::POST, &format!("/sessions/{id}/dip"), &json!({ "targets": targets })).await;
                assert_eq!(status, StatusCode::OK, "{value}");
            }
            Action::Paint { pixels, mode, steps } => {
                paint_to_end(app, &id, &json!({"pixels": pixels, "mode": mode, "steps": steps})).await;
            }
            Action::Undo => {
                let (status, _) = call(app, Method::POST, &format!("/sessions/{id}/undo"), None).await;
                assert_eq!(status, StatusCode::OK);
            }
        }
    }
    let (status, png) = call(app, Method::GET, &format!("/sessions/{id}/export"), None).await;
    assert_eq!(status, StatusCode::OK);
    png
}
