//! Interactive local style transfer by dipping and painting.
//!
//! A user "dips" style from regions of style images and "paints" it onto
//! regions of a content image. The scope of each action is a penetration map
//! grown by similarity-guided diffusion from the touched pixels; the transfer
//! itself matches penetration-weighted channel statistics.

pub mod diffusion;
pub mod error;
pub mod features;
pub mod field;
pub mod image;
pub mod interaction;
pub mod maps;
pub mod params;
pub mod script;
pub mod session;
pub mod tensor;
pub mod transfer;

pub use diffusion::{Mode, StopSignal, Termination};
pub use error::{Error, Result};
pub use features::{Backend, BackendKind};
pub use image::Image;
pub use interaction::{InteractionKind, InteractionMask};
pub use maps::{PenetrationMap, SimilarityMap};
pub use params::{FaceRule, Params};
pub use session::Session;
pub use transfer::StyleStats;
