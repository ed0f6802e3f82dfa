//! JSON session scripts for batch replay.
//!
//! ```json
//! {
//!   "content": "content.png",
//!   "styles": ["a.png", "b.png"],
//!   "params": {"v": 1.0, "r": 10, "epsilon": 0.01, "alpha": 0.7, "dt": 1.0},
//!   "actions": [
//!     {"op": "dip", "targets": [{"style": 0, "pixels": [[10, 12]]}, {"style": 1, "pixels": "whole"}]},
//!     {"op": "paint", "pixels": [[5, 5], [5, 6]], "mode": "auto"},
//!     {"op": "paint", "pixels": "whole", "mode": "manual", "steps": 12},
//!     {"op": "undo"}
//!   ]
//! }
//! ```

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::diffusion::{Mode, StopSignal};
use crate::error::Result;
use crate::interaction::InteractionMask;
use crate::session::{PaintFrame, PaintOutcome, Session};

/// Interaction pixels: `[row, col]` pairs or the literal `"whole"`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pixels {
    Whole,
    List(Vec<[usize; 2]>),
}

impl Pixels {
    pub fn to_mask(&self, height: usize, width: usize) -> Result<InteractionMask> {
        match self {
            Pixels::Whole => InteractionMask::whole(height, width),
            Pixels::List(list) => {
                let pixels: Vec<_> = list.iter().map(|&[r, c]| (r, c)).collect();
                InteractionMask::from_pixels(height, width, &pixels)
            }
        }
    }
}

impl Serialize for Pixels {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Pixels::Whole => serializer.serialize_str("whole"),
            Pixels::List(list) => list.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for Pixels {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Literal(String),
            List(Vec<[usize; 2]>),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Literal(s) if s == "whole" => Ok(Pixels::Whole),
            Raw::Literal(s) => Err(serde::de::Error::custom(format!("expected \"whole\", got {s:?}"))),
            Raw::List(list) => Ok(Pixels::List(list)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipTarget {
    pub style: usize,
    pub pixels: Pixels,
}

fn auto() -> Mode {
    Mode::Auto
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
pub enum Action {
    Dip {
        targets: Vec<DipTarget>,
    },
    Paint {
        pixels: Pixels,
        #[serde(default = "auto")]
        mode: Mode,
        /// Manual mode: diffusion steps before the simulated release.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        steps: Option<usize>,
    },
    Undo,
}

/// Parameters a script may set; anything else keeps its default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl ScriptParams {
    pub fn apply(&self, params: &mut crate::params::Params) {
        let fields = [
            (self.v, &mut params.v),
            (self.r, &mut params.r),
            (self.epsilon, &mut params.epsilon),
            (self.alpha, &mut params.alpha),
            (self.dt, &mut params.dt),
        ];
        for (src, dst) in fields {
            if let Some(v) = src {
                *dst = v;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    pub content: String,
    pub styles: Vec<String>,
    #[serde(default)]
    pub params: ScriptParams,
    #[serde(default)]
    pub actions: Vec<Action>,
}

/// What an action did.
#[derive(Debug)]
pub enum ActionOutcome {
    Dipped,
    Painted(PaintOutcome),
    Undone,
}

/// Applies one action to a session. Manual paints with `steps` release after
/// that many diffusion steps; `steps: 0` releases immediately.
pub fn apply_action(
    session: &mut Session,
    action: &Action,
    mut on_frame: impl FnMut(&PaintFrame<'_>),
) -> Result<ActionOutcome> {
    match action {
        Action::Dip { targets } => {
            let targets = targets
                .iter()
                .map(|t| {
                    let (h, w) = session
                        .style_dim(t.style)
                        .ok_or_else(|| crate::Error::InvalidArgument(format!("no style image {}", t.style)))?;
                    Ok((t.style, t.pixels.to_mask(h, w)?))
                })
                .collect::<Result<Vec<_>>>()?;
            session.dip(&targets)?;
            Ok(ActionOutcome::Dipped)
        }
        Action::Paint { pixels, mode, steps } => {
            let (h, w) = session.content_dim();
            let mask = pixels.to_mask(h, w)?;
            let stop = StopSignal::new();
            let release = if *mode == Mode::Manual { *steps } else { None };
            if release == Some(0) {
                stop.fire();
            }
            let outcome = session.paint(&mask, *mode, &stop, |frame| {
                on_frame(frame);
                if release == Some(frame.step) {
                    stop.fire();
                }
            })?;
            Ok(ActionOutcome::Painted(outcome))
        }
        Action::Undo => {
            session.undo()?;
            Ok(ActionOutcome::Undone)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let json = r#"{
            "content": "c.png", "styles": ["a.png", "b.png"],
            "params": {"v": 1.0, "r": 10, "epsilon": 0.01, "alpha": 0.7, "dt": 1.0},
            "actions": [
                {"op": "dip", "targets": [{"style": 0, "pixels": [[10, 12]]}, {"style": 1, "pixels": "whole"}]},
                {"op": "paint", "pixels": [[5, 5], [5, 6]], "mode": "auto"},
                {"op": "paint", "pixels": "whole", "mode": "manual", "steps": 12},
                {"op": "undo"}
            ]
        }"#;
        let script: Script = serde_json::from_str(json).unwrap();
        assert_eq!(script.actions.len(), 4);
        assert_eq!(
            script.actions[2],
            Action::Paint { pixels: Pixels::Whole, mode: Mode::Manual, steps: Some(12) }
        );
        let back: Script = serde_json::from_str(&serde_json::to_string(&script).unwrap()).unwrap();
        assert_eq!(back, script);
    }

    #[test]
    fn paint_mode_defaults_to_auto() {
        let a: Action = serde_json::from_str(r#"{"op": "paint", "pixels": [[1, 2]]}"#).unwrap();
        assert_eq!(a, Action::Paint { pixels: Pixels::List(vec![[1, 2]]), mode: Mode::Auto, steps: None });
    }

    #[test]
    fn rejects_bad_literal_and_unknown_op() {
        assert!(serde_json::from_str::<Pixels>(r#""all""#).is_err());
        assert!(serde_json::from_str::<Action>(r#"{"op": "smear"}"#).is_err());
        assert!(serde_json::from_str::<ScriptParams>(r#"{"q": 1}"#).is_err());
    }

    #[test]
    fn params_override() {
        let mut p = crate::params::Params::default();
        ScriptParams { r: Some(3.0), alpha: Some(0.5), ..Default::default() }.apply(&mut p);
        assert_eq!((p.r, p.alpha, p.v), (3.0, 0.5, 1.0));
    }
}
