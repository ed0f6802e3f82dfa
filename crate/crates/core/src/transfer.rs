//! Style statistics and their application.
//!
//! A dip produces penetration-weighted per-channel statistics of style
//! features. Painting renormalizes the content features to those statistics
//! and mixes the result into the running feature canvas through the content
//! penetration map, the latest paint dominating wherever it fully penetrates.

use ndarray::{Array2, Array3, ArrayView2, ArrayView3, Axis, Zip};

use crate::error::{Error, Result};
use crate::features::{Backend, BackendKind};
use crate::field::downsample_area;
use crate::image::Image;
use crate::maps::PenetrationMap;

/// Floor applied to content standard deviations before dividing.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// Penetration-weighted mean of each channel.
pub fn weighted_mean(features: ArrayView3<'_, f64>, weights: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    check_extents(features, weights)?;
    let total = weights.sum();
    if total <= 0.0 {
        return Err(Error::EmptySelection);
    }
    Ok(features
        .axis_iter(Axis(0))
        .map(|plane| Zip::from(&plane).and(&weights).fold(0.0, |acc, &f, &w| acc + w * f) / total)
        .collect())
}

/// Penetration-weighted population standard deviation of each channel.
pub fn weighted_std(features: ArrayView3<'_, f64>, weights: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    let mean = weighted_mean(features, weights)?;
    let total = weights.sum();
    Ok(features
        .axis_iter(Axis(0))
        .zip(&mean)
        .map(|(plane, &mu)| {
            let ss = Zip::from(&plane).and(&weights).fold(0.0, |acc, &f, &w| acc + w * (f - mu).powi(2));
            (ss / total).sqrt()
        })
        .collect())
}

/// Unweighted per-channel mean and population standard deviation.
pub fn channel_mean_std(features: ArrayView3<'_, f64>) -> (Vec<f64>, Vec<f64>) {
    let n = (features.dim().1 * features.dim().2) as f64;
    features
        .axis_iter(Axis(0))
        .map(|plane| {
            let mu = plane.fold(0.0, |acc, &f| acc + f) / n;
            let var = plane.fold(0.0, |acc, &f| acc + (f - mu).powi(2)) / n;
            (mu, var.sqrt())
        })
        .unzip()
}

fn check_extents(features: ArrayView3<'_, f64>, weights: ArrayView2<'_, f64>) -> Result<()> {
    let (_, h, w) = features.dim();
    if weights.dim() != (h, w) {
        return Err(Error::invalid(format!(
            "weights are {:?} but features are {h}x{w}",
            weights.dim()
        )));
    }
    Ok(())
}

/// Where a dip's statistics came from.
#[derive(Clone, Debug, PartialEq)]
pub struct DipSource {
    pub style: usize,
    pub penetration: PenetrationMap,
}

/// The "pigment" picked up by a dip.
#[derive(Clone, Debug, PartialEq)]
pub struct StyleStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub backend: BackendKind,
    pub sources: Vec<DipSource>,
}

impl StyleStats {
    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    /// Unweighted statistics of a whole feature tensor.
    pub fn of_features(features: ArrayView3<'_, f64>, backend: BackendKind) -> Self {
        let (mean, std) = channel_mean_std(features);
        Self { mean, std, backend, sources: Vec::new() }
    }
}

/// One style image's contribution to a dip.
pub struct DipSample<'a> {
    pub style: usize,
    /// Transfer-space features of the style image.
    pub features: ArrayView3<'a, f64>,
    /// Penetration map at image or feature resolution.
    pub penetration: &'a PenetrationMap,
}

/// Pools every (cell, weight) pair of all samples into one weighted
/// population and returns its mean and standard deviation.
pub fn dip(samples: &[DipSample<'_>], backend: BackendKind) -> Result<StyleStats> {
    let first = samples.first().ok_or_else(|| Error::invalid("dip needs at least one sample"))?;
    let channels = first.features.dim().0;
    let mut weights = Vec::with_capacity(samples.len());
    for s in samples {
        if s.features.dim().0 != channels {
            return Err(Error::invalid("dip samples disagree on channel count"));
        }
        let (_, h, w) = s.features.dim();
        weights.push(downsample_area(s.penetration.values().view(), h, w)?);
    }
    let total: f64 = weights.iter().map(|w| w.sum()).sum();
    if total <= 0.0 {
        return Err(Error::EmptySelection);
    }
    let pooled = |f: &dyn Fn(usize, f64) -> f64| -> Vec<f64> {
        (0..channels)
            .map(|c| {
                samples
                    .iter()
                    .zip(&weights)
                    .map(|(s, w)| {
                        Zip::from(&s.features.index_axis(Axis(0), c))
                            .and(w)
                            .fold(0.0, |acc, &x, &wt| acc + wt * f(c, x))
                    })
                    .sum::<f64>()
                    / total
            })
            .collect()
    };
    let mean = pooled(&|_, x| x);
    let std = pooled(&|c, x| (x - mean[c]).powi(2)).into_iter().map(f64::sqrt).collect();
    Ok(StyleStats {
        mean,
        std,
        backend,
        sources: samples
            .iter()
            .map(|s| DipSource { style: s.style, penetration: s.penetration.clone() })
            .collect(),
    })
}

/// Renormalizes content features to the given per-channel statistics.
pub fn local_adain(content: ArrayView3<'_, f64>, stats: &StyleStats) -> Result<Array3<f64>> {
    let channels = content.dim().0;
    if stats.channels() != channels {
        return Err(Error::invalid(format!(
            "style statistics have {} channels, content has {channels}",
            stats.channels()
        )));
    }
    let (mu_c, sigma_c) = channel_mean_std(content);
    let mut out = content.to_owned();
    for (c, mut plane) in out.axis_iter_mut(Axis(0)).enumerate() {
        let scale = stats.std[c];
        let shift = stats.mean[c];
        let (mu, sigma) = (mu_c[c], sigma_c[c].max(SIGMA_FLOOR));
        plane.mapv_inplace(|f| scale * ((f - mu) / sigma) + shift);
    }
    Ok(out)
}

/// Whole-image statistics transfer from `style` onto `content`.
pub fn classic_adain(content: ArrayView3<'_, f64>, style: ArrayView3<'_, f64>) -> Result<Array3<f64>> {
    local_adain(content, &StyleStats::of_features(style, BackendKind::Analytic))
}

/// `(1 - P) * previous + P * transferred`, per cell and channel.
pub fn mix_features(
    previous: ArrayView3<'_, f64>,
    transferred: ArrayView3<'_, f64>,
    penetration: ArrayView2<'_, f64>,
) -> Result<Array3<f64>> {
    if previous.dim() != transferred.dim() {
        return Err(Error::invalid("feature tensors differ in shape"));
    }
    check_extents(previous, penetration)?;
    let mut out = previous.to_owned();
    for (mut plane, t_plane) in out.axis_iter_mut(Axis(0)).zip(transferred.axis_iter(Axis(0))) {
        Zip::from(&mut plane).and(&t_plane).and(&penetration).for_each(|m, &a, &p| {
            let mixed = (1.0 - p) * *m + p * a;
            *m = mixed.clamp(m.min(a), m.max(a));
        });
    }
    Ok(out)
}

/// Content retention after one more paint: `R * (1 - P)`.
pub fn update_retention(retention: &Array2<f64>, penetration: &Array2<f64>) -> Result<Array2<f64>> {
    if retention.dim() != penetration.dim() {
        return Err(Error::invalid("retention and penetration extents differ"));
    }
    Ok(Zip::from(retention).and(penetration).map_collect(|&r, &p| r * (1.0 - p)))
}

/// Share of the original content kept at retention `r`.
pub fn content_share(r: f64, alpha: f64) -> f64 {
    ((r - alpha) / (1.0 - alpha)).max(0.0)
}

/// `O = C * phi(R) + T * (1 - phi(R))` at image resolution.
pub fn blend(content: &Image, transferred: &Image, retention: &Array2<f64>, alpha: f64) -> Result<Image> {
    let dim = (content.height(), content.width());
    if (transferred.height(), transferred.width()) != dim || retention.dim() != dim {
        return Err(Error::invalid("blend operands differ in extents"));
    }
    Image::from_fn(dim.0, dim.1, |r, c| {
        let phi = content_share(retention[[r, c]], alpha);
        let (cp, tp) = (content.pixel(r, c), transferred.pixel(r, c));
        [0, 1, 2].map(|k| (cp[k] * phi + tp[k] * (1.0 - phi)).clamp(0.0, 1.0))
    })
}

/// Synthesizes the mixed features and blends with the content.
pub fn render(
    mixed: &Array3<f64>,
    content: &Image,
    retention: &Array2<f64>,
    alpha: f64,
    backend: &Backend,
) -> Result<Image> {
    if retention.iter().all(|&r| content_share(r, alpha) == 1.0) {
        return Ok(content.clone());
    }
    let transferred = backend.synthesize(mixed)?;
    blend(content, &transferred, retention, alpha)
}
