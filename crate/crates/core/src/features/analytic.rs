//! Weight-free hand-crafted features: color, local luminance statistics and a
//! gradient orientation histogram, computed per pyramid level.

use std::f64::consts::PI;

use ndarray::{Array2, Array3};

use crate::field::downsample_area;
use crate::image::{rgb_to_lab, Image};

pub const CHANNELS: usize = 9;
pub const ORIENTATION_BINS: usize = 4;

/// Channel indices within an analytic feature map.
pub mod channel {
    pub const L: usize = 0;
    pub const A: usize = 1;
    pub const B: usize = 2;
    pub const LOCAL_MEAN: usize = 3;
    pub const LOCAL_STD: usize = 4;
    /// Gradients pointing along the column axis (vertical edges).
    pub const ORIENT_HORIZONTAL: usize = 5;
    pub const ORIENT_DIAGONAL: usize = 6;
    pub const ORIENT_VERTICAL: usize = 7;
    pub const ORIENT_ANTI_DIAGONAL: usize = 8;
}

/// Features for pyramid level `level` (1-based) at the given stride.
pub fn level_features(image: &Image, level: usize, stride: usize) -> Array3<f64> {
    let h = (image.height() / stride).max(1);
    let w = (image.width() / stride).max(1);
    let rgb = image.to_planes();
    let mut planes = [Array2::zeros((0, 0)), Array2::zeros((0, 0)), Array2::zeros((0, 0))];
    for (c, plane) in planes.iter_mut().enumerate() {
        *plane = downsample_area(rgb.index_axis(ndarray::Axis(0), c), h, w)
            .expect("level extents never exceed the image");
    }

    let mut out = Array3::zeros((CHANNELS, h, w));
    for r in 0..h {
        for c in 0..w {
            let [l, a, b] = rgb_to_lab([planes[0][[r, c]], planes[1][[r, c]], planes[2][[r, c]]]);
            out[[channel::L, r, c]] = (l / 100.0).clamp(0.0, 1.0);
            out[[channel::A, r, c]] = ((a + 128.0) / 255.0).clamp(0.0, 1.0);
            out[[channel::B, r, c]] = ((b + 128.0) / 255.0).clamp(0.0, 1.0);
        }
    }
    let luma = out.index_axis(ndarray::Axis(0), channel::L).to_owned();
    let radius = level;

    let (gx, gy) = gradients(&luma);
    let mut bins = Array3::<f64>::zeros((ORIENTATION_BINS, h, w));
    for r in 0..h {
        for c in 0..w {
            let (x, y) = (gx[[r, c]], gy[[r, c]]);
            let mag = x.hypot(y);
            if mag > 0.0 {
                let theta = y.atan2(x).rem_euclid(PI);
                let bin = (theta / (PI / ORIENTATION_BINS as f64)).round() as usize % ORIENTATION_BINS;
                bins[[bin, r, c]] = mag;
            }
        }
    }

    for r in 0..h {
        for c in 0..w {
            let (r0, r1) = (r.saturating_sub(radius), (r + radius).min(h - 1));
            let (c0, c1) = (c.saturating_sub(radius), (c + radius).min(w - 1));
            let count = ((r1 - r0 + 1) * (c1 - c0 + 1)) as f64;
            // Offsets from the center value keep flat windows exactly flat.
            let base = luma[[r, c]];
            let mut sum = 0.0;
            let mut hist = [0.0; ORIENTATION_BINS];
            for rr in r0..=r1 {
                for cc in c0..=c1 {
                    sum += luma[[rr, cc]] - base;
                    for (k, acc) in hist.iter_mut().enumerate() {
                        *acc += bins[[k, rr, cc]];
                    }
                }
            }
            let offset = sum / count;
            let mean = base + offset;
            let mut var = 0.0;
            for rr in r0..=r1 {
                for cc in c0..=c1 {
                    var += (luma[[rr, cc]] - base - offset).powi(2);
                }
            }
            out[[channel::LOCAL_MEAN, r, c]] = mean;
            out[[channel::LOCAL_STD, r, c]] = (var / count).sqrt();
            for (k, v) in hist.iter().enumerate() {
                out[[channel::ORIENT_HORIZONTAL + k, r, c]] = v / count;
            }
        }
    }
    out
}

/// Central differences with replicated borders; `x` runs along columns.
fn gradients(luma: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (h, w) = luma.dim();
    let gx = Array2::from_shape_fn((h, w), |(r, c)| {
        let (a, b) = (c.saturating_sub(1), (c + 1).min(w - 1));
        if a == b {
            0.0
        } else {
            (luma[[r, b]] - luma[[r, a]]) / (b - a) as f64
        }
    });
    let gy = Array2::from_shape_fn((h, w), |(r, c)| {
        let (a, b) = (r.saturating_sub(1), (r + 1).min(h - 1));
        if a == b {
            0.0
        } else {
            (luma[[b, c]] - luma[[a, c]]) / (b - a) as f64
        }
    });
    (gx, gy)
}
