//! Diffusion throughput measurements on synthetic images.

use std::time::Instant;

use dipaint_core::{Backend, Image, InteractionMask, Mode, Params, Session, StopSignal};
use serde::Serialize;

pub const SIZES: [usize; 3] = [128, 256, 512];

#[derive(Clone, Debug, Serialize)]
pub struct PathReport {
    pub steps: usize,
    pub seconds: f64,
    /// Zero when no step was measured.
    pub steps_per_second: f64,
    pub cg_iterations_per_step: f64,
}

impl PathReport {
    fn new(steps: usize, seconds: f64, cg_iterations: usize) -> Self {
        if steps == 0 {
            return Self { steps, seconds, steps_per_second: 0.0, cg_iterations_per_step: 0.0 };
        }
        let steps_per_second = if seconds > 0.0 { steps as f64 / seconds } else { 0.0 };
        Self { steps, seconds, steps_per_second, cg_iterations_per_step: cg_iterations as f64 / steps as f64 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub size: usize,
    pub requested_steps: usize,
    pub uniform: bool,
    pub cg_tolerance: f64,
    pub diffusion: PathReport,
    pub diffusion_render: PathReport,
}

/// Synthetic content: smooth colour ramps with a soft disc, or flat grey
/// when `uniform` (which makes the similarity identically one).
pub fn synthetic_image(size: usize, uniform: bool) -> Image {
    let n = size as f64;
    Image::from_fn(size, size, |r, c| {
        if uniform {
            return [0.5; 3];
        }
        let (y, x) = (r as f64 / n, c as f64 / n);
        let d = ((x - 0.6).powi(2) + (y - 0.4).powi(2)).sqrt();
        let disc = 1.0 / (1.0 + (40.0 * (d - 0.25)).exp());
        [0.2 + 0.5 * x, 0.3 + 0.4 * disc, 0.7 - 0.5 * y]
    })
    .expect("bench sizes are valid")
}

/// Runs `steps` manual diffusion steps from a centre click, once without
/// and once with a provisional render per step.
pub fn bench(size: usize, steps: usize, uniform: bool) -> dipaint_core::Result<BenchReport> {
    if !SIZES.contains(&size) {
        return Err(dipaint_core::Error::InvalidArgument(format!("size must be one of {SIZES:?}")));
    }
    let params = Params { max_steps: steps.max(1), ..Params::default() };
    let cg_tolerance = params.cg_tolerance;
    let content = synthetic_image(size, uniform);
    let style = synthetic_image(size, false);
    let mut session = Session::new(&content, &[style], params, Backend::Analytic)?;
    session.dip(&[(0, InteractionMask::whole(size, size)?)])?;
    let click = InteractionMask::click(size, size, size / 2, size / 2)?;

    let measure = |session: &mut Session, render: bool| -> dipaint_core::Result<PathReport> {
        let stop = StopSignal::new();
        if steps == 0 {
            stop.fire();
        }
        let mut render_error = None;
        let started = Instant::now();
        let outcome = session.paint(&click, Mode::Manual, &stop, |frame| {
            if render && render_error.is_none() {
                if let Err(e) = frame.render() {
                    render_error = Some(e);
                }
            }
        })?;
        let seconds = started.elapsed().as_secs_f64();
        if let Some(e) = render_error {
            return Err(e);
        }
        if outcome.committed {
            session.undo()?;
        }
        Ok(PathReport::new(outcome.steps, seconds, outcome.cg_iterations))
    };
    let diffusion = measure(&mut session, false)?;
    let diffusion_render = measure(&mut session, true)?;
    Ok(BenchReport { size, requested_steps: steps, uniform, cg_tolerance, diffusion, diffusion_render })
}
