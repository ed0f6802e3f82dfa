//! Batch replay of session scripts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dipaint_core::script::{apply_action, Action, ActionOutcome, Script, ScriptParams};
use dipaint_core::{Backend, Image, Params, Session, Termination};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("cannot parse script: {0}")]
    Parse(String),
    #[error(transparent)]
    Pipeline(#[from] dipaint_core::Error),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl ReplayError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ReplayError::Parse(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ActionMetrics {
    pub index: usize,
    pub op: &'static str,
    pub steps: usize,
    pub cg_iterations: usize,
    pub wall_seconds: f64,
    /// Absent for actions without diffusion steps.
    pub seconds_per_step: Option<f64>,
    pub termination: Option<Termination>,
    pub committed: Option<bool>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Metrics {
    pub actions: Vec<ActionMetrics>,
    pub total_steps: usize,
    pub total_cg_iterations: usize,
    pub wall_seconds: f64,
}

pub struct Replay {
    pub output: Image,
    pub metrics: Metrics,
}

pub fn load_script(path: &Path) -> Result<Script, ReplayError> {
    let text = fs::read_to_string(path).map_err(|e| ReplayError::Parse(format!("{}: {e}", path.display())))?;
    parse_script(&text)
}

pub fn parse_script(text: &str) -> Result<Script, ReplayError> {
    serde_json::from_str(text).map_err(|e| ReplayError::Parse(e.to_string()))
}

/// Script parameters with command-line overrides applied on top.
pub fn resolve_params(script: &Script, overrides: &ScriptParams) -> Result<Params, ReplayError> {
    let mut params = Params::default();
    script.params.apply(&mut params);
    overrides.apply(&mut params);
    params.validate()?;
    Ok(params)
}

/// Opens the content and style images, resolving paths against `base`.
pub fn load_images(script: &Script, base: &Path) -> Result<(Image, Vec<Image>), ReplayError> {
    let content = Image::open(base.join(&script.content))?;
    let styles = script.styles.iter().map(|s| Image::open(base.join(s))).collect::<Result<Vec<_>, _>>()?;
    Ok((content, styles))
}

/// Runs every action in order. With `frames` set, each diffusion step's
/// provisional render is written there.
pub fn replay(
    script: &Script,
    content: &Image,
    styles: &[Image],
    params: Params,
    backend: Backend,
    frames: Option<&Path>,
) -> Result<Replay, ReplayError> {
    let start = Instant::now();
    let mut session = Session::new(content, styles, params, backend)?;
    if let Some(dir) = frames {
        fs::create_dir_all(dir)?;
    }
    let mut metrics = Metrics::default();
    for (index, action) in script.actions.iter().enumerate() {
        let began = Instant::now();
        let mut frame_error = None;
        let outcome = apply_action(&mut session, action, |frame| {
            let Some(dir) = frames else { return };
            if frame_error.is_some() {
                return;
            }
            let path = dir.join(format!("action{index:03}_step{:04}.png", frame.step));
            if let Err(e) = frame.render().and_then(|img| img.save(path)) {
                frame_error = Some(e);
            }
        })?;
        if let Some(e) = frame_error {
            return Err(e.into());
        }
        let wall_seconds = began.elapsed().as_secs_f64();
        let entry = match outcome {
            ActionOutcome::Painted(p) => ActionMetrics {
                index,
                op: op_name(action),
                steps: p.steps,
                cg_iterations: p.cg_iterations,
                wall_seconds,
                seconds_per_step: (p.steps > 0).then(|| wall_seconds / p.steps as f64),
                termination: Some(p.termination),
                committed: Some(p.committed),
            },
            ActionOutcome::Dipped | ActionOutcome::Undone => ActionMetrics {
                index,
                op: op_name(action),
                steps: 0,
                cg_iterations: 0,
                wall_seconds,
                seconds_per_step: None,
                termination: None,
                committed: None,
            },
        };
        metrics.total_steps += entry.steps;
        metrics.total_cg_iterations += entry.cg_iterations;
        metrics.actions.push(entry);
    }
    let output = session.export()?;
    metrics.wall_seconds = start.elapsed().as_secs_f64();
    Ok(Replay { output, metrics })
}

fn op_name(action: &Action) -> &'static str {
    match action {
        Action::Dip { .. } => "dip",
        Action::Paint { .. } => "paint",
        Action::Undo => "undo",
    }
}

pub struct RunOptions {
    pub backend: Backend,
    pub overrides: ScriptParams,
    pub frames: bool,
}

pub const OUTPUT_FILE: &str = "output.png";
pub const METRICS_FILE: &str = "metrics.json";
pub const FRAMES_DIR: &str = "frames";

/// Replays the script at `script_path` and writes the output PNG, the metrics
/// report and optional frames into `out_dir`.
pub fn run(script_path: &Path, out_dir: &Path, options: RunOptions) -> Result<Metrics, ReplayError> {
    let script = load_script(script_path)?;
    let params = resolve_params(&script, &options.overrides)?;
    let base = script_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let (content, styles) = load_images(&script, &base)?;
    fs::create_dir_all(out_dir)?;
    let frames = options.frames.then(|| out_dir.join(FRAMES_DIR));
    let result = replay(&script, &content, &styles, params, options.backend, frames.as_deref())?;
    result.output.save(out_dir.join(OUTPUT_FILE))?;
    let report = serde_json::to_vec_pretty(&result.metrics).expect("metrics serialize");
    fs::write(out_dir.join(METRICS_FILE), report)?;
    Ok(result.metrics)
}
