//! Request and reply bodies of the session service.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use dipaint_core::script::{DipTarget, Pixels, ScriptParams};
use dipaint_core::{BackendKind, Mode, Termination};
use serde::{Deserialize, Serialize};

pub fn encode_b64(bytes: &[u8]) -> String {
    STANDARD.encode(bytes)
}

pub fn decode_b64(text: &str) -> Result<Vec<u8>, base64::DecodeError> {
    STANDARD.decode(text)
}

/// Images are base64-encoded PNG files.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub content: String,
    pub styles: Vec<String>,
    #[serde(default)]
    pub params: ScriptParams,
    #[serde(default = "analytic")]
    pub backend: BackendKind,
}

fn analytic() -> BackendKind {
    BackendKind::Analytic
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
    pub height: usize,
    pub width: usize,
    pub styles: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipRequest {
    pub targets: Vec<DipTarget>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DipPreview {
    pub style: usize,
    /// Peak-normalized penetration on the style image as a grey PNG.
    pub penetration: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DipReply {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub previews: Vec<DipPreview>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaintRequest {
    pub pixels: Pixels,
    #[serde(default = "auto")]
    pub mode: Mode,
    /// Manual mode: release after this many steps without a stop request.
    #[serde(default)]
    pub steps: Option<usize>,
}

fn auto() -> Mode {
    Mode::Auto
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PaintStarted {
    pub paint: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameKind {
    PenetrationFrame,
    RenderFrame,
    Terminal,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaintSummary {
    pub committed: bool,
    pub termination: Termination,
    pub steps: usize,
    pub cg_iterations: usize,
}

/// One line of a paint stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameMessage {
    pub session: String,
    pub seq: u64,
    pub kind: FrameKind,
    pub step: usize,
    /// Base64 PNG, or the error text for error frames.
    pub payload: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PaintSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UndoReply {
    pub paints: usize,
}
