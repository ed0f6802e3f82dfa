use ndarray::Array2;

use super::cg::LinearOperator;
use super::coefficients::DiffusionField;
use crate::error::{Error, Result};

/// Five-point system of one implicit diffusion step,
/// `(I - dt * div(D grad)) P_next = P`, with zero-flux boundaries.
///
/// Face couplings are stored once and shared by both neighbors, which makes
/// the matrix symmetric by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct StencilSystem {
    diagonal: Array2<f64>,
    /// `dt * D` on horizontal-neighbor faces; the matrix entry is its negation.
    east: Array2<f64>,
    /// `dt * D` on vertical-neighbor faces.
    south: Array2<f64>,
}

impl StencilSystem {
    pub fn assemble(field: &DiffusionField, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt must be positive"));
        }
        let (h, w) = field.dim();
        let east = field.east().mapv(|d| dt * d);
        let south = field.south().mapv(|d| dt * d);
        let mut diagonal = Array2::from_elem((h, w), 1.0);
        for ((r, c), &k) in east.indexed_iter() {
            diagonal[[r, c]] += k;
            diagonal[[r, c + 1]] += k;
        }
        for ((r, c), &k) in south.indexed_iter() {
            diagonal[[r, c]] += k;
            diagonal[[r + 1, c]] += k;
        }
        Ok(Self { diagonal, east, south })
    }

    pub fn dim(&self) -> (usize, usize) {
        self.diagonal.dim()
    }

    pub fn diagonal(&self) -> &Array2<f64> {
        &self.diagonal
    }

    /// Magnitude of the coupling between `(r, c)` and `(r, c + 1)`.
    pub fn east(&self) -> &Array2<f64> {
        &self.east
    }

    /// Magnitude of the coupling between `(r, c)` and `(r + 1, c)`.
    pub fn south(&self) -> &Array2<f64> {
        &self.south
    }

    /// Explicit matrix over row-major cell indices. Only sensible for small grids.
    pub fn to_dense(&self) -> Array2<f64> {
        let (h, w) = self.dim();
        let n = h * w;
        let mut m = Array2::zeros((n, n));
        for ((r, c), &d) in self.diagonal.indexed_iter() {
            m[[r * w + c, r * w + c]] = d;
        }
        for ((r, c), &k) in self.east.indexed_iter() {
            let (a, b) = (r * w + c, r * w + c + 1);
            m[[a, b]] = -k;
            m[[b, a]] = -k;
        }
        for ((r, c), &k) in self.south.indexed_iter() {
            let (a, b) = (r * w + c, (r + 1) * w + c);
            m[[a, b]] = -k;
            m[[b, a]] = -k;
        }
        m
    }
}

impl LinearOperator for StencilSystem {
    fn size(&self) -> usize {
        self.diagonal.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (h, w) = self.dim();
        let diag = self.diagonal.as_slice().expect("standard layout");
        let east = self.east.as_slice().expect("standard layout");
        let south = self.south.as_slice().expect("standard layout");
        for r in 0..h {
            let row = r * w;
            let erow = r * (w - 1);
            for c in 0..w {
                let i = row + c;
                let mut acc = diag[i] * x[i];
                if c > 0 {
                    acc -= east[erow + c - 1] * x[i - 1];
                }
                if c + 1 < w {
                    acc -= east[erow + c] * x[i + 1];
                }
                if r > 0 {
                    acc -= south[i - w] * x[i - w];
                }
                if r + 1 < h {
                    acc -= south[i] * x[i + w];
                }
                y[i] = acc;
            }
        }
    }
}
