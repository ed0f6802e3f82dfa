use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the diffusion coefficient on a cell face is derived from its two cells.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceRule {
    #[default]
    Min,
    Mean,
    Max,
}

impl FaceRule {
    pub fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            FaceRule::Min => a.min(b),
            FaceRule::Mean => 0.5 * (a + b),
            FaceRule::Max => a.max(b),
        }
    }
}

/// Simulation and blending parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Diffusion velocity.
    pub v: f64,
    /// Resistance coefficient.
    pub r: f64,
    /// Auto-termination threshold on the relative L1 change per step.
    pub epsilon: f64,
    /// Content retention factor.
    pub alpha: f64,
    /// Time step in pixel units.
    pub dt: f64,
    pub cg_tolerance: f64,
    /// Defaults to `10 * (height + width)` of the grid being solved.
    pub cg_max_iters: Option<usize>,
    pub max_steps: usize,
    pub face_rule: FaceRule,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            v: 1.0,
            r: 10.0,
            epsilon: 0.01,
            alpha: 0.7,
            dt: 1.0,
            cg_tolerance: 1e-8,
            cg_max_iters: None,
            max_steps: 2000,
            face_rule: FaceRule::Min,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(what.to_owned()))
            }
        };
        check(self.v.is_finite() && self.v > 0.0, "v must be positive")?;
        check(self.r.is_finite() && self.r >= 0.0, "r must be non-negative")?;
        check(self.epsilon > 0.0 && self.epsilon < 1.0, "epsilon must lie in (0, 1)")?;
        check(self.alpha >= 0.0 && self.alpha < 1.0, "alpha must lie in [0, 1)")?;
        check(self.dt.is_finite() && self.dt > 0.0, "dt must be positive")?;
        check(self.cg_tolerance > 0.0, "cg_tolerance must be positive")?;
        check(self.cg_max_iters != Some(0), "cg_max_iters must be positive")?;
        check(self.max_steps > 0, "max_steps must be positive")
    }

    pub fn cg_max_iters_for(&self, height: usize, width: usize) -> usize {
        self.cg_max_iters.unwrap_or(10 * (height + width))
    }
}
