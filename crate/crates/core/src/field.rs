//! Resampling of 2-D scalar fields between grid resolutions.
//!
//! Upsampling is align-corners bilinear, downsampling is exact area
//! averaging with fractional footprints.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Align-corners bilinear resampling to `target_h x target_w`.
///
/// Every output value is a convex combination of at most four inputs, so the
/// input range is preserved.
pub fn resample_bilinear(
    field: ArrayView2<'_, f64>,
    target_h: usize,
    target_w: usize,
) -> Result<Array2<f64>> {
    let (h, w) = field.dim();
    if h == 0 || w == 0 {
        return Err(Error::invalid("empty source field"));
    }
    if target_h == 0 || target_w == 0 {
        return Err(Error::invalid("zero target extent"));
    }
    let rows = axis_taps(h, target_h);
    let cols = axis_taps(w, target_w);
    Ok(Array2::from_shape_fn((target_h, target_w), |(i, j)| {
        let (r0, r1, fr) = rows[i];
        let (c0, c1, fc) = cols[j];
        let top = lerp(field[[r0, c0]], field[[r0, c1]], fc);
        let bottom = lerp(field[[r1, c0]], field[[r1, c1]], fc);
        lerp(top, bottom, fr)
    }))
}

/// Interpolates without leaving `[min(a, b), max(a, b)]`, and returns `a`
/// exactly when `a == b`.
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (a + (b - a) * t).clamp(a.min(b), a.max(b))
}

fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    (0..dst)
        .map(|i| {
            if src == 1 || dst == 1 {
                return (0, 0, 0.0);
            }
            let pos = i as f64 * (src - 1) as f64 / (dst - 1) as f64;
            let lo = (pos.floor() as usize).min(src - 1);
            let hi = (lo + 1).min(src - 1);
            let frac = pos - lo as f64;
            // Snap so the last sample lands exactly on the last source cell.
            if frac < 1e-12 {
                (lo, lo, 0.0)
            } else {
                (lo, hi, frac)
            }
        })
        .collect()
}

/// Area-average downsampling to `target_h x target_w`.
///
/// Output cell `(i, j)` is the mean of the source rectangle
/// `[i*H/h, (i+1)*H/h) x [j*W/w, (j+1)*W/w)`, with partial cells weighted by
/// their overlap.
pub fn downsample_area(
    field: ArrayView2<'_, f64>,
    target_h: usize,
    target_w: usize,
) -> Result<Array2<f64>> {
    let (h, w) = field.dim();
    if target_h == 0 || target_w == 0 {
        return Err(Error::invalid("zero target extent"));
    }
    if target_h > h || target_w > w {
        return Err(Error::invalid(format!(
            "downsample target {target_h}x{target_w} exceeds source {h}x{w}"
        )));
    }
    if (target_h, target_w) == (h, w) {
        return Ok(field.to_owned());
    }
    let rows = footprints(h, target_h);
    let cols = footprints(w, target_w);
    // Columns first, then rows.
    let mut partial = Array2::zeros((h, target_w));
    for r in 0..h {
        for (j, taps) in cols.iter().enumerate() {
            partial[[r, j]] = weighted_mean(taps, |c| field[[r, c]]);
        }
    }
    let mut out = Array2::zeros((target_h, target_w));
    for (i, taps) in rows.iter().enumerate() {
        for j in 0..target_w {
            out[[i, j]] = weighted_mean(taps, |r| partial[[r, j]]);
        }
    }
    Ok(out)
}

/// Mean taken relative to the first tap so constant footprints come out exact.
fn weighted_mean(taps: &[(usize, f64)], value: impl Fn(usize) -> f64) -> f64 {
    let base = value(taps[0].0);
    base + taps.iter().map(|&(i, wt)| wt * (value(i) - base)).sum::<f64>()
}

/// Normalized overlap weights of each destination cell with the source cells.
fn footprints(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            if src.is_multiple_of(dst) {
                let k = src / dst;
                let wt = 1.0 / k as f64;
                return (i * k..(i + 1) * k).map(|s| (s, wt)).collect();
            }
            let start = i as f64 * scale;
            let end = (i + 1) as f64 * scale;
            let first = start.floor() as usize;
            let last = (end.ceil() as usize).min(src);
            (first..last)
                .filter_map(|s| {
                    let overlap = (end.min(s as f64 + 1.0) - start.max(s as f64)).max(0.0);
                    (overlap > 0.0).then_some((s, overlap / scale))
                })
                .collect()
        })
        .collect()
}

/// Clamps every value into `[lo, hi]`.
pub fn clamp(field: &mut Array2<f64>, lo: f64, hi: f64) {
    field.mapv_inplace(|v| v.clamp(lo, hi));
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn bilinear_constant_and_single_source() {
        let c = Array2::from_elem((3, 5), 0.5);
        let out = resample_bilinear(c.view(), 7, 2).unwrap();
        assert!(out.iter().all(|&v| v == 0.5));

        let single = array![[0.3]];
        let out = resample_bilinear(single.view(), 4, 6).unwrap();
        assert_eq!(out.dim(), (4, 6));
        assert!(out.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn bilinear_align_corners_ramp() {
        let ramp = array![[0.0, 1.0]];
        let out = resample_bilinear(ramp.view(), 1, 4).unwrap();
        let expected = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (got, want) in out.iter().zip(expected) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn zero_targets_rejected() {
        let f = Array2::<f64>::zeros((2, 2));
        assert!(resample_bilinear(f.view(), 0, 2).is_err());
        assert!(downsample_area(f.view(), 1, 0).is_err());
        assert!(downsample_area(f.view(), 3, 2).is_err());
    }

    #[test]
    fn area_examples() {
        let diag = array![[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(downsample_area(diag.view(), 1, 1).unwrap(), array![[0.5]]);
        assert_eq!(downsample_area(diag.view(), 2, 2).unwrap(), diag);

        let checker = Array2::from_shape_fn((4, 4), |(r, c)| ((r + c) % 2) as f64);
        let out = downsample_area(checker.view(), 2, 2).unwrap();
        assert!(out.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn area_fractional_footprint() {
        // 3 -> 2: cells cover [0, 1.5) and [1.5, 3)
        let f = array![[0.0, 3.0, 6.0]];
        let out = downsample_area(f.view(), 1, 2).unwrap();
        assert!((out[[0, 0]] - 1.0).abs() < 1e-12);
        assert!((out[[0, 1]] - 5.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn bilinear_preserves_range(
            h in 1usize..6, w in 1usize..6, th in 1usize..12, tw in 1usize..12,
            vals in proptest::collection::vec(0.0f64..1.0, 36)
        ) {
            let f = Array2::from_shape_fn((h, w), |(r, c)| vals[r * 6 + c]);
            let (lo, hi) = f.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
            let out = resample_bilinear(f.view(), th, tw).unwrap();
            prop_assert_eq!(out.dim(), (th, tw));
            for &v in out.iter() {
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
            // clamping a field already inside [0, 1] changes nothing
            let mut clamped = out.clone();
            clamp(&mut clamped, 0.0, 1.0);
            prop_assert_eq!(clamped, out);
        }

        #[test]
        fn area_preserves_mean_on_even_division(
            h in 1usize..5, w in 1usize..5, k in 1usize..4,
            vals in proptest::collection::vec(-1.0f64..1.0, 400)
        ) {
            let f = Array2::from_shape_fn((h * k, w * k), |(r, c)| vals[r * 20 + c]);
            let out = downsample_area(f.view(), h, w).unwrap();
            prop_assert!((out.mean().unwrap() - f.mean().unwrap()).abs() < 1e-12);
        }

        #[test]
        fn upsample_then_area_keeps_constants(h in 1usize..6, w in 1usize..6, k in 1usize..4, c in 0.0f64..1.0) {
            let f = Array2::from_elem((h, w), c);
            let up = resample_bilinear(f.view(), h * k, w * k).unwrap();
            let down = downsample_area(up.view(), h, w).unwrap();
            prop_assert!(down.iter().all(|&v| v == c));
        }
    }
}
