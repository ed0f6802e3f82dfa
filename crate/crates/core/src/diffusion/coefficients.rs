use ndarray::Array2;

use crate::error::{Error, Result};
use crate::params::FaceRule;

/// Cell-centered diffusion coefficients plus their values on the staggered
/// faces between horizontally (`east`) and vertically (`south`) adjacent cells.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionField {
    cells: Array2<f64>,
    east: Array2<f64>,
    south: Array2<f64>,
}

impl DiffusionField {
    /// Builds faces from arbitrary positive cell values.
    pub fn from_cells(cells: Array2<f64>, rule: FaceRule) -> Result<Self> {
        if let Some(v) = cells.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!("diffusion coefficient {v} is not a finite non-negative value")));
        }
        let (h, w) = cells.dim();
        if h == 0 || w == 0 {
            return Err(Error::invalid("empty diffusion grid"));
        }
        let east = Array2::from_shape_fn((h, w - 1), |(r, c)| {
            rule.combine(cells[[r, c]], cells[[r, c + 1]])
        });
        let south = Array2::from_shape_fn((h - 1, w), |(r, c)| {
            rule.combine(cells[[r, c]], cells[[r + 1, c]])
        });
        Ok(Self { cells, east, south })
    }

    pub fn uniform(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::from_cells(Array2::from_elem((height, width), value), FaceRule::Min)
    }

    pub fn dim(&self) -> (usize, usize) {
        self.cells.dim()
    }

    pub fn cells(&self) -> &Array2<f64> {
        &self.cells
    }

    /// Face between `(r, c)` and `(r, c + 1)`.
    pub fn east(&self) -> &Array2<f64> {
        &self.east
    }

    /// Face between `(r, c)` and `(r + 1, c)`.
    pub fn south(&self) -> &Array2<f64> {
        &self.south
    }
}

/// `D = v * exp(-r * (1 - G))` per cell; faces by `rule`.
pub fn diffusion_coefficients(
    similarity: &Array2<f64>,
    v: f64,
    r: f64,
    rule: FaceRule,
) -> Result<DiffusionField> {
    if !(v > 0.0 && v.is_finite()) || !(r >= 0.0 && r.is_finite()) {
        return Err(Error::invalid("need v > 0 and r >= 0"));
    }
    if let Some(g) = similarity.iter().find(|g| !g.is_finite()) {
        return Err(Error::invalid(format!("non-finite similarity {g}")));
    }
    let cells = similarity.mapv(|g| v * (-r * (1.0 - g)).exp());
    DiffusionField::from_cells(cells, rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn full_similarity_gives_velocity() {
        let g = Array2::ones((4, 5));
        let d = diffusion_coefficients(&g, 1.7, 10.0, FaceRule::Min).unwrap();
        assert!(d.cells().iter().all(|&x| x == 1.7));
        assert!(d.east().iter().all(|&x| x == 1.7));
        assert!(d.south().iter().all(|&x| x == 1.7));
        assert_eq!(d.east().dim(), (4, 4));
        assert_eq!(d.south().dim(), (3, 5));
    }

    #[test]
    fn half_similarity_scalar() {
        let d = diffusion_coefficients(&array![[0.5]], 1.0, 10.0, FaceRule::Min).unwrap();
        assert!((d.cells()[[0, 0]] - 6.737_946_999_085_467e-3).abs() < 1e-12);
    }

    #[test]
    fn velocity_scales_linearly() {
        let g = array![[0.1, 0.9, 0.4], [0.0, 1.0, 0.7]];
        let a = diffusion_coefficients(&g, 1.0, 3.0, FaceRule::Min).unwrap();
        let b = diffusion_coefficients(&g, 2.0, 3.0, FaceRule::Min).unwrap();
        for (x, y) in a.cells().iter().zip(b.cells()) {
            assert_eq!(2.0 * x, *y);
        }
        for (x, y) in a.east().iter().zip(b.east()) {
            assert_eq!(2.0 * x, *y);
        }
        for (x, y) in a.south().iter().zip(b.south()) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn faces_follow_rule() {
        let g = array![[0.2, 0.8], [0.6, 0.4]];
        for rule in [FaceRule::Min, FaceRule::Mean, FaceRule::Max] {
            let d = diffusion_coefficients(&g, 1.0, 2.0, rule).unwrap();
            let c = d.cells();
            assert_eq!(d.east()[[0, 0]], rule.combine(c[[0, 0]], c[[0, 1]]));
            assert_eq!(d.south()[[0, 1]], rule.combine(c[[0, 1]], c[[1, 1]]));
        }
    }

    #[test]
    fn resistance_is_monotone() {
        let g = array![[0.0, 0.3], [0.6, 0.99]];
        let mut prev = diffusion_coefficients(&g, 1.0, 0.0, FaceRule::Min).unwrap();
        for r in [0.5, 1.0, 5.0, 10.0, 20.0] {
            let next = diffusion_coefficients(&g, 1.0, r, FaceRule::Min).unwrap();
            for (a, b) in prev.cells().iter().zip(next.cells()) {
                assert!(b < a);
            }
            prev = next;
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(diffusion_coefficients(&array![[f64::NAN]], 1.0, 1.0, FaceRule::Min).is_err());
    }
}
