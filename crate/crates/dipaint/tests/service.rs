mod common;

use axum::http::{Method, StatusCode};
use common::*;
use dipaint::service::wire::{decode_b64, DipReply, FrameKind, PaintStarted};
use dipaint::service::{router, ServiceConfig};
use dipaint_core::Image;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> axum::Router {
    router(ServiceConfig::default())
}

async fn dipped_session(app: &axum::Router) -> String {
    let id = create(app, &content_image(), &[style_image(0)], json!({})).await;
    let (status, _) = call_json(app, Method::POST, &format!("/sessions/{id}/dip"), &json!({"targets": [{"style": 0, "pixels": "whole"}]})).await;
    assert_eq!(status, StatusCode::OK);
    id
}

async fn export_png(app: &axum::Router, id: &str) -> Vec<u8> {
    let (status, png) = call(app, Method::GET, &format!("/sessions/{id}/export"), None).await;
    assert_eq!(status, StatusCode::OK);
    png
}

fn error_code(value: &Value) -> &str {
    value["error"]["code"].as_str().unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn fresh_export_is_normalized_content() {
    let app = app();
    let content = content_image();
    let id = create(&app, &content, &[style_image(0)], json!({})).await;
    let uploaded = Image::decode_png(&content.encode_png().unwrap()).unwrap();
    assert_eq!(export_png(&app, &id).await, uploaded.encode_png().unwrap());
    assert_eq!(export_png(&app, &id).await, export_png(&app, &id).await);
}

#[tokio::test(flavor = "multi_thread")]
async fn unknown_ids_are_not_found() {
    let app = app();
    for (method, uri) in [
        (Method::POST, "/sessions/nope/dip"),
        (Method::POST, "/sessions/nope/paint"),
        (Method::GET, "/sessions/nope/paint/p1/stream"),
        (Method::POST, "/sessions/nope/paint/p1/stop"),
        (Method::POST, "/sessions/nope/undo"),
        (Method::GET, "/sessions/nope/export"),
        (Method::DELETE, "/sessions/nope"),
    ] {
        let body = match uri {
            u if u.ends_with("/dip") => Some(br#"{"targets": []}"#.to_vec()),
            u if u.ends_with("/paint") => Some(br#"{"pixels": "whole"}"#.to_vec()),
            _ => None,
        };
        let (status, bytes) = call(&app, method, uri, body).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        let value: Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(error_code(&value), "not_found");
    }
    let id = dipped_session(&app).await;
    let (status, _) = call(&app, Method::POST, &format!("/sessions/{id}/paint/p9/stop"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn paint_before_dip_is_rejected() {
    let app = app();
    let id = create(&app, &content_image(), &[style_image(0)], json!({})).await;
    let (status, value) = call_json(&app, Method::POST, &format!("/sessions/{id}/paint"), &json!({"pixels": [[3, 3]]})).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(error_code(&value), "precondition");
    // The rejected paint leaves the session usable.
    let (status, _) = call_json(&app, Method::POST, &format!("/sessions/{id}/dip"), &json!({"targets": [{"style": 0, "pixels": [[1, 1]]}]})).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test(flavor = "multi_thread")]
async fn dip_returns_stats_and_previews() {
    let app = app();
    let id = create(&app, &content_image(), &[style_image(0), style_image(1)], json!({})).await;
    let (status, value) = call_json(
        &app,
        Method::POST,
        &format!("/sessions/{id}/dip"),
        &json!({"targets": [{"style": 0, "pixels": [[4, 4]]}, {"style": 1, "pixels": "whole"}]}),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{value}");
    let reply: DipReply = serde_json::from_value(value).unwrap();
    assert_eq!((reply.mean.len(), reply.std.len()), (3, 3));
    assert_eq!(reply.previews.iter().map(|p| p.style).collect::<Vec<_>>(), vec![0, 1]);
    for preview in &reply.previews {
        let img = Image::decode_png(&decode_b64(&preview.penetration).unwrap()).unwrap();
        assert_eq!((img.height(), img.width()), (32, 32));
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn auto_paint_streams_ordered_frames() {
    let app = app();
    let id = dipped_session(&app).await;
    let before = export_png(&app, &id).await;
    let frames = paint_to_end(&app, &id, &json!({"pixels": [[20, 14]], "mode": "auto"})).await;
    assert!(frames.windows(2).all(|w| w[0].seq < w[1].seq));
    assert!(frames.iter().all(|f| f.session == id));
    let terminal = frames.last().unwrap();
    let summary = terminal.summary.as_ref().unwrap();
    assert!(summary.committed);
    assert!(summary.steps >= 1);
    assert_eq!(frames.iter().filter(|f| f.kind == FrameKind::Terminal).count(), 1);
    let body = &frames[..frames.len() - 1];
    assert!(!body.is_empty());
    for pair in body.chunks(2) {
        assert_eq!(pair[0].kind, FrameKind::PenetrationFrame);
        assert_eq!(pair[1].kind, FrameKind::RenderFrame);
        assert_eq!(pair[0].step, pair[1].step);
    }
    let after = export_png(&app, &id).await;
    assert_ne!(after, before);
    assert_eq!(decode_b64(&terminal.payload).unwrap(), after);
}

#[tokio::test(flavor = "multi_thread")]
async fn immediate_stop_leaves_session_unchanged() {
    let app = app();
    let id = dipped_session(&app).await;
    let before = export_png(&app, &id).await;
    for mode in ["manual", "auto"] {
        let (status, value) = call_json(&app, Method::POST, &format!("/sessions/{id}/paint"), &json!({"pixels": [[10, 10]], "mode": mode})).await;
        assert_eq!(status, StatusCode::ACCEPTED);
        let paint = serde_json::from_value::<PaintStarted>(value).unwrap().paint;
        let (status, _) = call(&app, Method::POST, &format!("/sessions/{id}/paint/{paint}/stop"), None).await;
        assert_eq!(status, StatusCode::ACCEPTED);
        let (status, bytes) = call(&app, Method::GET, &format!("/sessions/{id}/paint/{paint}/stream"), None).await;
        assert_eq!(status, StatusCode::OK);
        let frames = parse_frames(&bytes);
        let terminal = frames.last().unwrap();
        assert_eq!(terminal.kind, FrameKind::Terminal);
        assert!(!terminal.summary.as_ref().unwrap().committed);
        assert_eq!(export_png(&app, &id).await, before);
    }
    let (status, value) = call_json(&app, Method::POST, &format!("/sessions/{id}/undo"), &json!({})).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(error_code(&value), "nothing_to_undo");
}

#[tokio::test(flavor = "multi_thread")]
async fn manual_stop_mid_stream_commits() {
    let app = app();
    let id = dipped_session(&app).await;
    let (_, value) = call_json(&app, Method::POST, &format!("/sessions/{id}/paint"), &json!({"pixels": [[10, 10]], "mode": "manual"})).await;
    let paint = serde_json::from_value::<PaintStarted>(value).unwrap().paint;
    let request = axum::http::Request::get(format!("/sessions/{id}/paint/{paint}/stream")).body(axum::body::Body::empty()).unwrap();
    let mut body = app.clone().oneshot(request).await.unwrap().into_body();
    let mut buffer = Vec::new();
    let mut stopped = false;
    while let Some(frame) = body.frame().await {
        buffer.extend_from_slice(frame.unwrap().data_ref().unwrap());
        if !stopped && buffer.contains(&b'\n') {
            let (status, _) = call(&app, Method::POST, &format!("/sessions/{id}/paint/{paint}/stop"), None).await;
            assert_eq!(status, StatusCode::ACCEPTED);
            stopped = true;
        }
    }
    let frames = parse_frames(&buffer);
    let summary = frames.last().unwrap().summary.clone().unwrap();
    assert!(summary.committed);
    assert!(summary.steps >= 1);
    assert_eq!(summary.termination, dipaint_core::Termination::ManuallyStopped);
    let (status, value) = call_json(&app, Method::POST, &format!("/sessions/{id}/undo"), &json!({})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(value["paints"], 0);
}

#[tokio::test(flavor = "multi_thread")]
async fn concurrent_paint_conflicts() {
    let app = app();
    let id = dipped_session(&app).await;
    let (_, value) = call_json(&app, Method::POST, &format!("/sessions/{id}/paint"), &json!({"pixels": [[10, 10]], "mode": "manual"})).await;
    let paint = serde_json::from_value::<PaintStarted>(value).unwrap().paint;
    let (status, value) = call_json(&app, Method::POST, &format!("/sessions/{id}/paint"), &json!({"pixels": [[12, 12]]})).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(error_code(&value), "conflict");
    for (method, uri) in [(Method::POST, format!("/sessions/{id}/undo")), (Method::GET, format!("/sessions/{id}/export"))] {
        assert_eq!(call(&app, method, &uri, None).await.0, StatusCode::CONFLICT);
    }
    call(&app, Method::POST, &format!("/sessions/{id}/paint/{paint}/stop"), None).await;
    let (_, bytes) = call(&app, Method::GET, &format!("/sessions/{id}/paint/{paint}/stream"), None).await;
    assert_eq!(parse_frames(&bytes).last().unwrap().kind, FrameKind::Terminal);
    let (status, bytes) = call(&app, Method::GET, &format!("/sessions/{id}/paint/{paint}/stream"), None).await;
    assert_eq!(status, StatusCode::CONFLICT, "{}", String::from_utf8_lossy(&bytes));
    paint_to_end(&app, &id, &json!({"pixels": [[12, 12]]})).await;
}

#[tokio::test(flavor = "multi_thread")]
async fn oversized_payloads_get_structured_errors() {
    let app = router(ServiceConfig { max_body_bytes: 4096, neural: None });
    let big = vec![b' '; 8192];
    let (status, bytes) = call(&app, Method::POST, "/sessions", Some(big)).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    let value: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(error_code(&value), "payload_too_large");

    let app = self::app();
    let wide = Image::from_fn(8, 2056, |_, _| [0.5; 3]).unwrap();
    let req = json!({
        "content": dipaint::service::wire::encode_b64(&wide.encode_png().unwrap()),
        "styles": [dipaint::service::wire::encode_b64(&style_image(0).encode_png().unwrap())],
    });
    let (status, value) = call_json(&app, Method::POST, "/sessions", &req).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(error_code(&value), "resource_limit");
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_requests_are_bad_requests() {
    let app = app();
    let (status, bytes) = call(&app, Method::POST, "/sessions", Some(b"{not json".to_vec())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&serde_json::from_slice(&bytes).unwrap()), "invalid_json");
    let (status, value) = call_json(&app, Method::POST, "/sessions", &json!({"content": "!!", "styles": []})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&value), "bad_request");
    let (status, value) = call_json(&app, Method::POST, "/sessions", &json!({"content": "", "styles": [], "backend": "neural"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&value), "configuration");
    let id = dipped_session(&app).await;
    let (status, _) = call_json(&app, Method::POST, &format!("/sessions/{id}/paint"), &json!({"pixels": [[400, 1]]})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread")]
async fn delete_removes_session() {
    let app = app();
    let id = dipped_session(&app).await;
    assert_eq!(call(&app, Method::DELETE, &format!("/sessions/{id}"), None).await.0, StatusCode::NO_CONTENT);
    assert_eq!(call(&app, Method::GET, &format!("/sessions/{id}/export"), None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn sessions_are_independent() {
    let app = app();
    let a = dipped_session(&app).await;
    let b = dipped_session(&app).await;
    assert_ne!(a, b);
    let before = export_png(&app, &b).await;
    paint_to_end(&app, &a, &json!({"pixels": "whole"})).await;
    assert_eq!(export_png(&app, &b).await, before);
    assert_ne!(export_png(&app, &a).await, before);
}
