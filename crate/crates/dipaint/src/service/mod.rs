//! HTTP session service.
//!
//! Paint frames stream as newline-delimited JSON [`FrameMessage`]s. A paint
//! does not begin diffusing until its stream is attached or it is stopped.

mod error;
pub mod wire;

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{mpsc as std_mpsc, Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::{Body, Bytes};
use axum::extract::{DefaultBodyLimit, FromRequest, Path, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use dipaint_core::session::penetration_image;
use dipaint_core::{Backend, BackendKind, Image, Mode, Params, Session, StopSignal};
use serde::de::DeserializeOwned;
use tokio::sync::{mpsc, oneshot};

pub use error::ApiError;
use wire::*;

/// Frames are sent at most this often; skipped steps still run.
pub const FRAME_INTERVAL: Duration = Duration::from_millis(1000 / 30);
const STREAM_CAPACITY: usize = 64;

#[derive(Clone)]
pub struct ServiceConfig {
    pub max_body_bytes: usize,
    /// Backend used for sessions that request the neural one.
    pub neural: Option<Backend>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { max_body_bytes: 64 << 20, neural: None }
    }
}

struct AppState {
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Slot>>>,
    next_id: AtomicU64,
}

struct Slot {
    id: String,
    content_dim: (usize, usize),
    session: Arc<Mutex<Session>>,
    /// Latest paint; kept after it finishes so its stream can still attach.
    paint: Mutex<Option<Arc<PaintHandle>>>,
    next_paint: AtomicU64,
}

struct PaintHandle {
    id: String,
    running: AtomicBool,
    stop: StopSignal,
    go: Mutex<Option<std_mpsc::Sender<()>>>,
    frames: Mutex<Option<mpsc::Receiver<FrameMessage>>>,
}

impl PaintHandle {
    fn release(&self) {
        if let Some(go) = self.go.lock().unwrap().take() {
            let _ = go.send(());
        }
    }
}

impl Slot {
    fn ensure_idle(&self) -> Result<(), ApiError> {
        match &*self.paint.lock().unwrap() {
            Some(p) if p.running.load(Ordering::SeqCst) => Err(ApiError::conflict("a paint is in progress")),
            _ => Ok(()),
        }
    }

    fn paint_handle(&self, id: &str) -> Result<Arc<PaintHandle>, ApiError> {
        match &*self.paint.lock().unwrap() {
            Some(p) if p.id == id => Ok(p.clone()),
            _ => Err(ApiError::not_found("paint")),
        }
    }
}

type Shared = Arc<AppState>;

pub fn router(config: ServiceConfig) -> Router {
    let limit = config.max_body_bytes;
    let state = Arc::new(AppState { config, sessions: Mutex::new(HashMap::new()), next_id: AtomicU64::new(1) });
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", delete(delete_session))
        .route("/sessions/{id}/dip", post(dip))
        .route("/sessions/{id}/paint", post(start_paint))
        .route("/sessions/{id}/paint/{paint}/stream", get(stream_paint))
        .route("/sessions/{id}/paint/{paint}/stop", post(stop_paint))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/export", get(export))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// JSON body whose rejections are reported as structured errors.
pub struct JsonBody<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for JsonBody<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state).await.map_err(|rejection| {
            let status = rejection.status();
            let code = if status == StatusCode::PAYLOAD_TOO_LARGE { "payload_too_large" } else { "bad_request" };
            ApiError::new(status, code, rejection.body_text())
        })?;
        serde_json::from_slice(&bytes)
            .map(JsonBody)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", e.to_string()))
    }
}

fn slot(state: &AppState, id: &str) -> Result<Arc<Slot>, ApiError> {
    state.sessions.lock().unwrap().get(id).cloned().ok_or_else(|| ApiError::not_found("session"))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))?
}

fn decode_image(b64: &str, what: &str) -> Result<Image, ApiError> {
    let bytes = decode_b64(b64).map_err(|e| ApiError::bad_request(format!("{what}: {e}")))?;
    Ok(Image::decode_png(&bytes)?)
}

fn png_b64(image: &Image) -> Result<String, ApiError> {
    Ok(encode_b64(&image.encode_png()?))
}

async fn create_session(
    State(state): State<Shared>,
    JsonBody(req): JsonBody<CreateSession>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let backend = match req.backend {
        BackendKind::Analytic => Backend::Analytic,
        BackendKind::Neural => state
            .config
            .neural
            .clone()
            .ok_or_else(|| ApiError::from(dipaint_core::Error::Config("service has no neural weights".into())))?,
    };
    let session = blocking(move || {
        let content = decode_image(&req.content, "content")?;
        let styles = req
            .styles
            .iter()
            .enumerate()
            .map(|(i, s)| decode_image(s, &format!("style {i}")))
            .collect::<Result<Vec<_>, _>>()?;
        let mut params = Params::default();
        req.params.apply(&mut params);
        Ok(Session::new(&content, &styles, params, backend)?)
    })
    .await?;
    let id = format!("s{}", state.next_id.fetch_add(1, Ordering::SeqCst));
    let (height, width) = session.content_dim();
    let styles = session.style_count();
    let slot = Slot {
        id: id.clone(),
        content_dim: (height, width),
        session: Arc::new(Mutex::new(session)),
        paint: Mutex::new(None),
        next_paint: AtomicU64::new(1),
    };
    state.sessions.lock().unwrap().insert(id.clone(), Arc::new(slot));
    Ok((StatusCode::CREATED, Json(SessionCreated { id, height, width, styles })))
}

async fn delete_session(State(state): State<Shared>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    let slot = state.sessions.lock().unwrap().remove(&id).ok_or_else(|| ApiError::not_found("session"))?;
    if let Some(paint) = slot.paint.lock().unwrap().take() {
        paint.stop.fire();
        paint.release();
    }
    Ok(StatusCode::NO_CONTENT)
}

async fn dip(
    State(state): State<Shared>,
    Path(id): Path<String>,
    JsonBody(req): JsonBody<DipRequest>,
) -> Result<Json<DipReply>, ApiError> {
    let slot = slot(&state, &id)?;
    slot.ensure_idle()?;
    let reply = blocking(move || {
        let mut session = slot.session.lock().unwrap();
        let targets = req
            .targets
            .iter()
            .map(|t| {
                let (h, w) = session
                    .style_dim(t.style)
                    .ok_or_else(|| ApiError::bad_request(format!("no style image {}", t.style)))?;
                Ok((t.style, t.pixels.to_mask(h, w)?))
            })
            .collect::<Result<Vec<_>, ApiError>>()?;
        let stats = session.dip(&targets)?.clone();
        let previews = stats
            .sources
            .iter()
            .map(|source| {
                let (h, w) = session.style_dim(source.style).expect("dipped style exists");
                let map = source.penetration.crop(h, w)?;
                Ok(DipPreview { style: source.style, penetration: png_b64(&penetration_image(&map)?)? })
            })
            .collect::<Result<Vec<_>, ApiError>>()?;
        Ok(DipReply { mean: stats.mean, std: stats.std, previews })
    })
    .await?;
    Ok(Json(reply))
}

async fn start_paint(
    State(state): State<Shared>,
    Path(id): Path<String>,
    JsonBody(req): JsonBody<PaintRequest>,
) -> Result<(StatusCode, Json<PaintStarted>), ApiError> {
    let slot = slot(&state, &id)?;
    let (h, w) = slot.content_dim;
    let mask = req.pixels.to_mask(h, w)?;
    let (go_tx, go_rx) = std_mpsc::channel();
    let (frame_tx, frame_rx) = mpsc::channel(STREAM_CAPACITY);
    let handle = {
        let mut current = slot.paint.lock().unwrap();
        if current.as_ref().is_some_and(|p| p.running.load(Ordering::SeqCst)) {
            return Err(ApiError::conflict("a paint is in progress"));
        }
        let handle = Arc::new(PaintHandle {
            id: format!("p{}", slot.next_paint.fetch_add(1, Ordering::SeqCst)),
            running: AtomicBool::new(true),
            stop: StopSignal::new(),
            go: Mutex::new(Some(go_tx)),
            frames: Mutex::new(Some(frame_rx)),
        });
        *current = Some(handle.clone());
        handle
    };
    let (ready_tx, ready_rx) = oneshot::channel();
    let worker = PaintWorker { slot: slot.clone(), handle: handle.clone(), frames: frame_tx, seq: 0 };
    tokio::task::spawn_blocking(move || worker.run(mask, req, go_rx, ready_tx));
    match ready_rx.await {
        Ok(Ok(())) => Ok((StatusCode::ACCEPTED, Json(PaintStarted { paint: handle.id.clone() }))),
        Ok(Err(e)) => Err(e),
        Err(_) => Err(ApiError::internal("paint worker exited")),
    }
}

struct PaintWorker {
    slot: Arc<Slot>,
    handle: Arc<PaintHandle>,
    frames: mpsc::Sender<FrameMessage>,
    seq: u64,
}

impl PaintWorker {
    fn run(
        mut self,
        mask: dipaint_core::InteractionMask,
        req: PaintRequest,
        go: std_mpsc::Receiver<()>,
        ready: oneshot::Sender<Result<(), ApiError>>,
    ) {
        let session = self.slot.session.clone();
        let mut session = session.lock().unwrap();
        if session.brush().is_none() {
            self.finish();
            let _ = ready.send(Err(dipaint_core::Error::Precondition("paint requires a prior dip".into()).into()));
            return;
        }
        let _ = ready.send(Ok(()));
        // Either an attached stream or a stop request lets the paint proceed.
        let _ = go.recv();

        let stop = self.handle.stop.clone();
        let release = if req.mode == Mode::Manual { req.steps } else { None };
        if release == Some(0) {
            stop.fire();
        }
        let mut last_sent: Option<Instant> = None;
        let result = session.paint(&mask, req.mode, &stop, |frame| {
            if release == Some(frame.step) {
                stop.fire();
            }
            if last_sent.is_some_and(|t| t.elapsed() < FRAME_INTERVAL) {
                return;
            }
            last_sent = Some(Instant::now());
            let penetration = frame.penetration().and_then(|p| penetration_image(&p)).and_then(|i| i.encode_png());
            let render = frame.render().and_then(|i| i.encode_png());
            let delivered = match (penetration, render) {
                (Ok(p), Ok(r)) => {
                    self.send(FrameKind::PenetrationFrame, frame.step, encode_b64(&p), None)
                        && self.send(FrameKind::RenderFrame, frame.step, encode_b64(&r), None)
                }
                _ => false,
            };
            // A vanished consumer or an unrenderable frame counts as a release.
            if !delivered {
                stop.fire();
            }
        });
        let terminal = result.and_then(|outcome| Ok((outcome, session.export()?.encode_png()?)));
        drop(session);
        self.finish();
        match terminal {
            Ok((outcome, png)) => {
                let summary = PaintSummary {
                    committed: outcome.committed,
                    termination: outcome.termination,
                    steps: outcome.steps,
                    cg_iterations: outcome.cg_iterations,
                };
                self.send(FrameKind::Terminal, outcome.steps, encode_b64(&png), Some(summary));
            }
            Err(e) => {
                self.send(FrameKind::Error, 0, e.to_string(), None);
                self.send(FrameKind::Terminal, 0, String::new(), None);
            }
        }
    }

    fn finish(&self) {
        self.handle.running.store(false, Ordering::SeqCst);
    }

    fn send(&mut self, kind: FrameKind, step: usize, payload: String, summary: Option<PaintSummary>) -> bool {
        self.seq += 1;
        let message = FrameMessage { session: self.slot.id.clone(), seq: self.seq, kind, step, payload, summary };
        self.frames.blocking_send(message).is_ok()
    }
}

async fn stream_paint(
    State(state): State<Shared>,
    Path((id, paint)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let slot = slot(&state, &id)?;
    let handle = slot.paint_handle(&paint)?;
    let rx = handle.frames.lock().unwrap().take().ok_or_else(|| ApiError::conflict("stream already attached"))?;
    handle.release();
    let lines = futures::stream::unfold(rx, |mut rx| async move {
        let message = rx.recv().await?;
        let mut line = serde_json::to_vec(&message).expect("frame serializes");
        line.push(b'\n');
        Some((Ok::<_, Infallible>(Bytes::from(line)), rx))
    });
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], Body::from_stream(lines)).into_response())
}

async fn stop_paint(
    State(state): State<Shared>,
    Path((id, paint)): Path<(String, String)>,
) -> Result<StatusCode, ApiError> {
    let slot = slot(&state, &id)?;
    let handle = slot.paint_handle(&paint)?;
    handle.stop.fire();
    handle.release();
    Ok(StatusCode::ACCEPTED)
}

async fn undo(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<UndoReply>, ApiError> {
    let slot = slot(&state, &id)?;
    slot.ensure_idle()?;
    blocking(move || {
        let mut session = slot.session.lock().unwrap();
        session.undo()?;
        Ok(Json(UndoReply { paints: session.log().len() }))
    })
    .await
}

async fn export(State(state): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let slot = slot(&state, &id)?;
    slot.ensure_idle()?;
    let png = blocking(move || Ok(slot.session.lock().unwrap().export()?.encode_png()?)).await?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}
