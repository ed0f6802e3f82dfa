//! Similarity-guided diffusion that turns an interaction into a soft action scope.
//!
//! Concentration starts as the interaction indicator and evolves under
//! `dP/dt = div(D grad P)` with zero-flux boundaries, where the coefficient
//! `D = v * exp(-r * (1 - G))` shrinks wherever the similarity `G` to the
//! interaction is low. Each step is backward Euler on a staggered grid, solved
//! with conjugate gradient.

mod cg;
mod coefficients;
mod run;
mod stencil;

pub use cg::{cg_solve, CgSolution, LinearOperator};
pub use coefficients::{diffusion_coefficients, DiffusionField};
pub use run::{change_rate, init_penetration, step, DiffusionRun, Mode, StepOutcome, StopSignal, Termination};
pub use stencil::StencilSystem;
