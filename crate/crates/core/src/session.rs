//! Interactive session: a content canvas, a palette of style images, the
//! loaded brush and the running feature/retention state.

use std::collections::VecDeque;

use ndarray::{s, Array2, Array3};

use crate::diffusion::{DiffusionRun, Mode, StopSignal, Termination};
use crate::error::{Error, Result};
use crate::features::{aggregate_similarity, extract_features, Backend, FeaturePyramid, LEVELS};
use crate::field::downsample_area;
use crate::image::Image;
use crate::interaction::InteractionMask;
use crate::maps::PenetrationMap;
use crate::params::Params;
use crate::transfer::{self, DipSample, StyleStats};

pub const MAX_STYLES: usize = 16;
pub const MAX_EXTENT: usize = 2048;
pub const UNDO_DEPTH: usize = 32;
/// Images are padded so every pyramid level has integral extents.
pub const ALIGNMENT: usize = 1 << (LEVELS - 1);

struct Canvas {
    /// Reflection-padded image.
    image: Image,
    /// Extents before padding.
    dim: (usize, usize),
    pyramid: FeaturePyramid,
    features: Array3<f64>,
}

impl Canvas {
    fn new(image: &Image, backend: &Backend) -> Result<Self> {
        if image.height() > MAX_EXTENT || image.width() > MAX_EXTENT {
            return Err(Error::Resource(format!(
                "image {}x{} exceeds {MAX_EXTENT} pixels per side",
                image.height(),
                image.width()
            )));
        }
        let padded = image.pad_reflect(ALIGNMENT);
        let pyramid = extract_features(&padded, backend)?;
        let features = backend.transfer_features(&padded, &pyramid);
        Ok(Self { image: padded, dim: (image.height(), image.width()), pyramid, features })
    }

    fn padded_dim(&self) -> (usize, usize) {
        (self.image.height(), self.image.width())
    }

    fn mask(&self, interaction: &InteractionMask) -> Result<InteractionMask> {
        if interaction.dim() != self.dim {
            return Err(Error::invalid(format!(
                "interaction is {:?} but the image is {:?}",
                interaction.dim(),
                self.dim
            )));
        }
        let (h, w) = self.padded_dim();
        interaction.extend_to(h, w)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PaintRecord {
    /// `None` for paints committed with an explicit penetration map.
    pub interaction: Option<InteractionMask>,
    pub mode: Mode,
    pub steps: usize,
    pub termination: Termination,
}

#[derive(Clone)]
struct Checkpoint {
    mixed: Array3<f64>,
    retention: Array2<f64>,
}

/// Outcome of a paint once diffusion has finished.
#[derive(Clone, Debug)]
pub struct PaintOutcome {
    pub termination: Termination,
    pub steps: usize,
    pub cg_iterations: usize,
    /// False when the paint was cancelled before it could take effect.
    pub committed: bool,
    /// Terminal peak-normalized penetration, cropped to the content extents.
    pub penetration: PenetrationMap,
}

/// Per-step view of a paint in progress.
pub struct PaintFrame<'a> {
    pub step: usize,
    pub rate: f64,
    pub cg_iterations: usize,
    raw: &'a Array2<f64>,
    session: &'a Session,
    transferred: &'a Array3<f64>,
}

impl PaintFrame<'_> {
    /// Current concentration rescaled to peak 1, cropped to the content.
    pub fn penetration(&self) -> Result<PenetrationMap> {
        let p = PenetrationMap::new(self.raw.clone())?.normalized();
        Ok(self.session.crop_map(p))
    }

    /// What the canvas would look like if the paint ended now.
    pub fn render(&self) -> Result<Image> {
        let p = PenetrationMap::new(self.raw.clone())?.normalized();
        let (mixed, retention) = self.session.mixed_with(self.transferred, &p)?;
        self.session.render_state(&mixed, &retention)
    }
}

pub struct Session {
    backend: Backend,
    params: Params,
    content: Canvas,
    styles: Vec<Canvas>,
    brush: Option<StyleStats>,
    mixed: Array3<f64>,
    retention: Array2<f64>,
    log: Vec<PaintRecord>,
    checkpoints: VecDeque<Checkpoint>,
}

impl Session {
    pub fn new(content: &Image, styles: &[Image], params: Params, backend: Backend) -> Result<Self> {
        params.validate()?;
        if styles.is_empty() || styles.len() > MAX_STYLES {
            return Err(Error::invalid(format!("need 1 to {MAX_STYLES} style images, got {}", styles.len())));
        }
        let content = Canvas::new(content, &backend)?;
        let styles = styles.iter().map(|s| Canvas::new(s, &backend)).collect::<Result<Vec<_>>>()?;
        let mixed = content.features.clone();
        let retention = Array2::ones(content.padded_dim());
        Ok(Self {
            backend,
            params,
            content,
            styles,
            brush: None,
            mixed,
            retention,
            log: Vec::new(),
            checkpoints: VecDeque::new(),
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn content_dim(&self) -> (usize, usize) {
        self.content.dim
    }

    pub fn padded_dim(&self) -> (usize, usize) {
        self.content.padded_dim()
    }

    pub fn style_count(&self) -> usize {
        self.styles.len()
    }

    pub fn style_dim(&self, index: usize) -> Option<(usize, usize)> {
        self.styles.get(index).map(|s| s.dim)
    }

    pub fn content_pyramid(&self) -> &FeaturePyramid {
        &self.content.pyramid
    }

    pub fn style_pyramid(&self, index: usize) -> Option<&FeaturePyramid> {
        self.styles.get(index).map(|s| &s.pyramid)
    }

    /// Transfer-space features of a style image, padded.
    pub fn style_features(&self, index: usize) -> Option<&Array3<f64>> {
        self.styles.get(index).map(|s| &s.features)
    }

    pub fn content_features(&self) -> &Array3<f64> {
        &self.content.features
    }

    pub fn brush(&self) -> Option<&StyleStats> {
        self.brush.as_ref()
    }

    /// Running mixed features, at transfer resolution of the padded canvas.
    pub fn mixed(&self) -> &Array3<f64> {
        &self.mixed
    }

    /// Retention map of the padded canvas.
    pub fn retention(&self) -> &Array2<f64> {
        &self.retention
    }

    pub fn log(&self) -> &[PaintRecord] {
        &self.log
    }

    /// Loads the brush with statistics pooled over all targets.
    ///
    /// Every target's scope is grown by an automatic diffusion run on its
    /// style image; the mirror padding never contributes weight.
    pub fn dip(&mut self, targets: &[(usize, InteractionMask)]) -> Result<&StyleStats> {
        if targets.is_empty() {
            return Err(Error::invalid("dip needs at least one target"));
        }
        let mut maps = Vec::with_capacity(targets.len());
        for (index, interaction) in targets {
            let style = self
                .styles
                .get(*index)
                .ok_or_else(|| Error::invalid(format!("no style image {index}")))?;
            let mask = style.mask(interaction)?;
            let similarity = aggregate_similarity(&style.pyramid, &mask)?;
            let mut run = DiffusionRun::from_interaction(&mask, &similarity, &self.params, Mode::Auto)?;
            run.run(&StopSignal::new(), |_| {})?;
            let mut weights = run.normalized()?.into_inner();
            let (h, w) = style.dim;
            weights.slice_mut(s![h.., ..]).fill(0.0);
            weights.slice_mut(s![.., w..]).fill(0.0);
            maps.push((*index, PenetrationMap::new(weights)?));
        }
        let samples: Vec<_> = maps
            .iter()
            .map(|(index, p)| DipSample { style: *index, features: self.styles[*index].features.view(), penetration: p })
            .collect();
        let stats = transfer::dip(&samples, self.backend.kind())?;
        Ok(self.brush.insert(stats))
    }

    /// Paints with the loaded brush, calling `on_frame` after every diffusion step.
    ///
    /// State changes only once diffusion terminates. A stop before the first
    /// step, or any stop of an automatic paint, cancels without committing.
    pub fn paint(
        &mut self,
        interaction: &InteractionMask,
        mode: Mode,
        stop: &StopSignal,
        mut on_frame: impl FnMut(&PaintFrame<'_>),
    ) -> Result<PaintOutcome> {
        let brush = self
            .brush
            .as_ref()
            .ok_or_else(|| Error::Precondition("paint requires a prior dip".into()))?;
        let mask = self.content.mask(interaction)?;
        let similarity = aggregate_similarity(&self.content.pyramid, &mask)?;
        let transferred = transfer::local_adain(self.content.features.view(), brush)?;
        let mut run = DiffusionRun::from_interaction(&mask, &similarity, &self.params, mode)?;
        let termination = run.run(stop, |r| {
            on_frame(&PaintFrame {
                step: r.steps(),
                rate: r.last_rate(),
                cg_iterations: r.last_cg_iterations(),
                raw: r.penetration(),
                session: self,
                transferred: &transferred,
            })
        })?;
        let penetration = run.normalized()?;
        let cancelled = termination == Termination::ManuallyStopped && (mode == Mode::Auto || run.steps() == 0);
        if !cancelled {
            self.commit(&transferred, &penetration)?;
            self.log.push(PaintRecord { interaction: Some(interaction.clone()), mode, steps: run.steps(), termination });
        }
        Ok(PaintOutcome {
            termination,
            steps: run.steps(),
            cg_iterations: run.total_cg_iterations(),
            committed: !cancelled,
            penetration: self.crop_map(penetration),
        })
    }

    /// Commits a paint with an explicit penetration map over the padded
    /// canvas, bypassing diffusion.
    pub fn apply_paint(&mut self, penetration: &PenetrationMap) -> Result<()> {
        let brush = self
            .brush
            .as_ref()
            .ok_or_else(|| Error::Precondition("paint requires a prior dip".into()))?;
        if penetration.dim() != self.padded_dim() {
            return Err(Error::invalid("penetration map must cover the padded canvas"));
        }
        let transferred = transfer::local_adain(self.content.features.view(), brush)?;
        self.commit(&transferred, penetration)?;
        self.log.push(PaintRecord { interaction: None, mode: Mode::Auto, steps: 0, termination: Termination::Running });
        Ok(())
    }

    fn commit(&mut self, transferred: &Array3<f64>, penetration: &PenetrationMap) -> Result<()> {
        let (mixed, retention) = self.mixed_with(transferred, penetration)?;
        if self.checkpoints.len() == UNDO_DEPTH {
            self.checkpoints.pop_front();
        }
        self.checkpoints.push_back(Checkpoint {
            mixed: std::mem::replace(&mut self.mixed, mixed),
            retention: std::mem::replace(&mut self.retention, retention),
        });
        Ok(())
    }

    fn mixed_with(&self, transferred: &Array3<f64>, penetration: &PenetrationMap) -> Result<(Array3<f64>, Array2<f64>)> {
        let (_, fh, fw) = self.mixed.dim();
        let coarse = downsample_area(penetration.values().view(), fh, fw)?;
        let mixed = transfer::mix_features(self.mixed.view(), transferred.view(), coarse.view())?;
        let retention = transfer::update_retention(&self.retention, penetration.values())?;
        Ok((mixed, retention))
    }

    pub fn undo(&mut self) -> Result<()> {
        let cp = self.checkpoints.pop_back().ok_or(Error::NothingToUndo)?;
        self.mixed = cp.mixed;
        self.retention = cp.retention;
        self.log.pop();
        Ok(())
    }

    /// Current output image at the content's original extents.
    pub fn export(&self) -> Result<Image> {
        self.render_state(&self.mixed, &self.retention)
    }

    fn render_state(&self, mixed: &Array3<f64>, retention: &Array2<f64>) -> Result<Image> {
        let full = transfer::render(mixed, &self.content.image, retention, self.params.alpha, &self.backend)?;
        let (h, w) = self.content.dim;
        full.crop(h, w)
    }

    fn crop_map(&self, p: PenetrationMap) -> PenetrationMap {
        let (h, w) = self.content.dim;
        p.crop(h, w).expect("content fits inside the padded canvas")
    }
}

/// Grayscale rendering of a penetration map.
pub fn penetration_image(p: &PenetrationMap) -> Result<Image> {
    let (h, w) = p.dim();
    let v = p.values();
    Image::from_fn(h, w, |r, c| [v[[r, c]]; 3])
}
