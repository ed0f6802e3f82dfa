//! Multi-level image features and interaction-conditioned similarity maps.

pub mod analytic;
pub mod neural;

use std::sync::Arc;

use ndarray::{Array2, Array3, Axis};

use crate::error::{Error, Result};
use crate::field::resample_bilinear;
use crate::image::Image;
use crate::interaction::InteractionMask;
use crate::maps::SimilarityMap;
use crate::tensor::TensorContainer;

pub use neural::NeuralNet;

pub const LEVELS: usize = 4;

/// Stride of pyramid level `index` (0-based).
pub fn level_stride(index: usize) -> usize {
    1 << index
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Analytic,
    Neural,
}

/// Source of features and of the space in which style statistics are matched.
#[derive(Clone, Debug)]
pub enum Backend {
    Analytic,
    Neural(Arc<NeuralNet>),
}

impl Backend {
    pub fn neural(weights: &TensorContainer) -> Result<Self> {
        let net = NeuralNet::from_container(weights)?;
        if net.encoder_stages() != LEVELS {
            return Err(Error::config(format!(
                "encoder has {} stages, {LEVELS} required",
                net.encoder_stages()
            )));
        }
        if net.input_channels() != 3 {
            return Err(Error::config("encoder must take RGB input"));
        }
        Ok(Backend::Neural(Arc::new(net)))
    }

    pub fn kind(&self) -> BackendKind {
        match self {
            Backend::Analytic => BackendKind::Analytic,
            Backend::Neural(_) => BackendKind::Neural,
        }
    }

    /// Downscale factor of the tensor that dips and paints operate on.
    pub fn transfer_stride(&self) -> usize {
        match self {
            Backend::Analytic => 1,
            Backend::Neural(_) => level_stride(LEVELS - 1),
        }
    }

    /// The tensor that dips and paints operate on: L*a*b* planes (scaled by
    /// 1/100) for the analytic backend, the deepest tapped encoder feature
    /// for the neural backend.
    pub fn transfer_features(&self, image: &Image, pyramid: &FeaturePyramid) -> Array3<f64> {
        match self {
            Backend::Analytic => image.to_lab_planes(),
            Backend::Neural(_) => pyramid.levels[LEVELS - 1].data.clone(),
        }
    }

    /// Maps a transfer-space tensor back to an image.
    pub fn synthesize(&self, features: &Array3<f64>) -> Result<Image> {
        match self {
            Backend::Analytic => Image::from_lab_planes(features),
            Backend::Neural(net) => decode(features, net),
        }
    }
}

/// One pyramid level, `channels x height x width`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    /// 1-based level index.
    pub level: usize,
    pub stride: usize,
    pub data: Array3<f64>,
}

impl FeatureMap {
    pub fn dim(&self) -> (usize, usize) {
        let (_, h, w) = self.data.dim();
        (h, w)
    }

    pub fn channels(&self) -> usize {
        self.data.dim().0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeaturePyramid {
    pub levels: Vec<FeatureMap>,
    pub backend: BackendKind,
    /// Extents of the image the pyramid was computed from.
    pub image_dim: (usize, usize),
}

pub fn extract_features(image: &Image, backend: &Backend) -> Result<FeaturePyramid> {
    let levels = match backend {
        Backend::Analytic => (0..LEVELS)
            .map(|i| {
                let stride = level_stride(i);
                FeatureMap { level: i + 1, stride, data: analytic::level_features(image, i + 1, stride) }
            })
            .collect(),
        Backend::Neural(net) => encode(image, net)?.levels,
    };
    Ok(FeaturePyramid { levels, backend: backend.kind(), image_dim: (image.height(), image.width()) })
}

/// Runs the encoder on an RGB image.
pub fn encode(image: &Image, net: &NeuralNet) -> Result<FeaturePyramid> {
    if net.encoder_stages() != LEVELS {
        return Err(Error::config(format!("encoder has {} stages, {LEVELS} required", net.encoder_stages())));
    }
    let taps = net.encode_tensor(&image.to_planes())?;
    let levels = taps
        .into_iter()
        .enumerate()
        .map(|(i, data)| FeatureMap { level: i + 1, stride: level_stride(i), data })
        .collect();
    Ok(FeaturePyramid { levels, backend: BackendKind::Neural, image_dim: (image.height(), image.width()) })
}

/// Runs the decoder and clamps the result into an RGB image.
pub fn decode(features: &Array3<f64>, net: &NeuralNet) -> Result<Image> {
    if features.dim().0 != net.feature_channels() {
        return Err(Error::config(format!(
            "decoder expects {} channels, got {}",
            net.feature_channels(),
            features.dim().0
        )));
    }
    let out = net.decode_tensor(features)?;
    if out.dim().0 != 3 {
        return Err(Error::config(format!("decoder produces {} channels, 3 required", out.dim().0)));
    }
    Image::from_planes(&out.mapv(|v| v.clamp(0.0, 1.0)))
}

/// Mean cosine similarity of every cell to the selected cells, clamped to `[0, 1]`.
///
/// Cells whose feature vector has zero norm are similar to nothing.
pub fn layer_similarity(features: &Array3<f64>, selected: &Array2<bool>) -> Result<Array2<f64>> {
    let (channels, h, w) = features.dim();
    if selected.dim() != (h, w) {
        return Err(Error::invalid("selection extents differ from the feature map"));
    }
    let count = selected.iter().filter(|&&b| b).count();
    if count == 0 {
        return Err(Error::invalid("empty interaction"));
    }
    let norms = features.map_axis(Axis(0), |v| v.dot(&v).sqrt());
    let unit = |r: usize, c: usize, k: usize| {
        let n = norms[[r, c]];
        if n > 0.0 {
            features[[k, r, c]] / n
        } else {
            0.0
        }
    };
    // The mean of cosines equals the cosine against the mean unit vector.
    let mut centroid = vec![0.0; channels];
    for ((r, c), _) in selected.indexed_iter().filter(|(_, &on)| on) {
        for (k, acc) in centroid.iter_mut().enumerate() {
            *acc += unit(r, c, k);
        }
    }
    centroid.iter_mut().for_each(|v| *v /= count as f64);
    Ok(Array2::from_shape_fn((h, w), |(r, c)| {
        let s: f64 = centroid.iter().enumerate().map(|(k, u)| unit(r, c, k) * u).sum();
        s.clamp(0.0, 1.0)
    }))
}

/// Averages the per-level similarity maps at image resolution.
pub fn aggregate_similarity(pyramid: &FeaturePyramid, interaction: &InteractionMask) -> Result<SimilarityMap> {
    let (h, w) = pyramid.image_dim;
    if interaction.dim() != (h, w) {
        return Err(Error::invalid(format!(
            "interaction is {:?} but the image is {h}x{w}",
            interaction.dim()
        )));
    }
    let mut total = Array2::<f64>::zeros((h, w));
    for level in &pyramid.levels {
        let (lh, lw) = level.dim();
        let mut selected = Array2::from_elem((lh, lw), false);
        for (r, c) in interaction.pixels() {
            selected[[(r / level.stride).min(lh - 1), (c / level.stride).min(lw - 1)]] = true;
        }
        let sim = layer_similarity(&level.data, &selected)?;
        total += &resample_bilinear(sim.view(), h, w)?;
    }
    total.mapv_inplace(|v| (v / pyramid.levels.len() as f64).clamp(0.0, 1.0));
    SimilarityMap::new(total)
}
