use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use ndarray::Array2;

use super::cg::cg_solve;
use super::coefficients::{diffusion_coefficients, DiffusionField};
use super::stencil::StencilSystem;
use crate::error::{Error, Result};
use crate::interaction::InteractionMask;
use crate::maps::{PenetrationMap, SimilarityMap};
use crate::params::Params;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Stop when the relative change per step drops to `epsilon`.
    Auto,
    /// Keep diffusing until the stop signal fires.
    Manual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Running,
    AutoStopped,
    ManuallyStopped,
    StepCapped,
}

/// Cross-thread stop flag for a running diffusion.
#[derive(Clone, Debug, Default)]
pub struct StopSignal(Arc<AtomicBool>);

impl StopSignal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fire(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_fired(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// Result of one implicit step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub penetration: Array2<f64>,
    pub cg_iterations: usize,
}

/// Advances `current` by one backward-Euler step of the assembled system.
pub fn step(
    current: &Array2<f64>,
    system: &StencilSystem,
    tol: f64,
    max_iters: usize,
) -> Result<StepOutcome> {
    if current.dim() != system.dim() {
        return Err(Error::invalid("penetration and system extents differ"));
    }
    let rhs = current.as_standard_layout();
    let rhs = rhs.as_slice().expect("standard layout");
    // Warm-starting from the previous state keeps every CG residual at zero
    // total mass, so the solve conserves the sum to round-off.
    let sol = cg_solve(system, rhs, rhs.to_vec(), tol, max_iters)?;
    let mut x = sol.x;
    project_nonnegative(&mut x);
    let penetration = Array2::from_shape_vec(system.dim(), x).expect("matching length");
    Ok(StepOutcome { penetration, cg_iterations: sol.iterations })
}

/// Removes solver undershoot below zero while keeping the total.
///
/// The exact solution is non-negative; inexact CG leaves tolerance-sized
/// negative values far from the source. Zeroing them and shrinking the
/// positive part by the same mass never raises any value.
fn project_nonnegative(x: &mut [f64]) {
    let deficit: f64 = x.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
    if deficit == 0.0 {
        return;
    }
    let positive: f64 = x.iter().filter(|v| **v > 0.0).sum();
    if positive <= deficit {
        return;
    }
    let scale = (positive - deficit) / positive;
    for v in x.iter_mut() {
        *v = if *v < 0.0 { 0.0 } else { *v * scale };
    }
}

pub fn init_penetration(interaction: &InteractionMask) -> Array2<f64> {
    interaction.indicator()
}

/// `sum |next - prev| / sum prev`.
pub fn change_rate(prev: &Array2<f64>, next: &Array2<f64>) -> f64 {
    let mass: f64 = prev.sum();
    if mass <= 0.0 {
        return 0.0;
    }
    let change: f64 = prev.iter().zip(next).map(|(a, b)| (b - a).abs()).sum();
    change / mass
}

/// Incremental state of one diffusion from an initial concentration.
#[derive(Clone, Debug)]
pub struct DiffusionRun {
    system: StencilSystem,
    penetration: Array2<f64>,
    steps: usize,
    last_rate: f64,
    state: Termination,
    mode: Mode,
    epsilon: f64,
    max_steps: usize,
    cg_tolerance: f64,
    cg_max_iters: usize,
    last_cg_iterations: usize,
    total_cg_iterations: usize,
}

impl DiffusionRun {
    pub fn new(initial: Array2<f64>, field: &DiffusionField, params: &Params, mode: Mode) -> Result<Self> {
        params.validate()?;
        if initial.dim() != field.dim() {
            return Err(Error::invalid("initial penetration and diffusion field extents differ"));
        }
        let (h, w) = field.dim();
        Ok(Self {
            system: StencilSystem::assemble(field, params.dt)?,
            penetration: initial,
            steps: 0,
            last_rate: f64::INFINITY,
            state: Termination::Running,
            mode,
            epsilon: params.epsilon,
            max_steps: params.max_steps,
            cg_tolerance: params.cg_tolerance,
            cg_max_iters: params.cg_max_iters_for(h, w),
            last_cg_iterations: 0,
            total_cg_iterations: 0,
        })
    }

    /// Starts from the interaction indicator with coefficients derived from `similarity`.
    pub fn from_interaction(
        interaction: &InteractionMask,
        similarity: &SimilarityMap,
        params: &Params,
        mode: Mode,
    ) -> Result<Self> {
        if interaction.dim() != similarity.dim() {
            return Err(Error::invalid("interaction and similarity extents differ"));
        }
        let field = diffusion_coefficients(similarity.values(), params.v, params.r, params.face_rule)?;
        Self::new(init_penetration(interaction), &field, params, mode)
    }

    pub fn penetration(&self) -> &Array2<f64> {
        &self.penetration
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Relative L1 change of the latest step; infinite before the first step.
    pub fn last_rate(&self) -> f64 {
        self.last_rate
    }

    pub fn state(&self) -> Termination {
        self.state
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn last_cg_iterations(&self) -> usize {
        self.last_cg_iterations
    }

    pub fn total_cg_iterations(&self) -> usize {
        self.total_cg_iterations
    }

    pub fn is_running(&self) -> bool {
        self.state == Termination::Running
    }

    /// Performs one step unless the run has already terminated.
    pub fn advance(&mut self) -> Result<()> {
        if !self.is_running() {
            return Ok(());
        }
        let next = step(&self.penetration, &self.system, self.cg_tolerance, self.cg_max_iters)?;
        self.last_rate = change_rate(&self.penetration, &next.penetration);
        self.penetration = next.penetration;
        self.steps += 1;
        self.last_cg_iterations = next.cg_iterations;
        self.total_cg_iterations += next.cg_iterations;
        if self.mode == Mode::Auto && self.last_rate <= self.epsilon {
            self.state = Termination::AutoStopped;
        } else if self.steps >= self.max_steps {
            self.state = Termination::StepCapped;
        }
        Ok(())
    }

    /// Steps until termination, calling `on_step` after every step.
    ///
    /// The stop signal is polled before each step. In manual mode it is the
    /// normal way to finish; in auto mode it cancels early.
    pub fn run(&mut self, stop: &StopSignal, mut on_step: impl FnMut(&DiffusionRun)) -> Result<Termination> {
        while self.is_running() {
            if stop.is_fired() {
                self.state = Termination::ManuallyStopped;
                break;
            }
            self.advance()?;
            on_step(self);
        }
        Ok(self.state)
    }

    /// Terminal action scope: the current concentration rescaled to peak 1.
    pub fn normalized(&self) -> Result<PenetrationMap> {
        Ok(PenetrationMap::new(self.penetration.clone())?.normalized())
    }
}
