use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InteractionKind {
    Click,
    Scribble,
    WholeImage,
}

/// Binary mask of the pixels a user touched.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionMask {
    cells: Array2<bool>,
    kind: InteractionKind,
}

impl InteractionMask {
    pub fn click(height: usize, width: usize, row: usize, col: usize) -> Result<Self> {
        Self::from_pixels(height, width, &[(row, col)])
    }

    pub fn whole(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("empty grid"));
        }
        Ok(Self { cells: Array2::from_elem((height, width), true), kind: InteractionKind::WholeImage })
    }

    /// Builds a click (one distinct pixel) or a scribble. Duplicates collapse;
    /// a set covering every cell becomes a whole-image interaction.
    pub fn from_pixels(height: usize, width: usize, pixels: &[(usize, usize)]) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("empty grid"));
        }
        if pixels.is_empty() {
            return Err(Error::invalid("interaction has no pixels"));
        }
        let mut cells = Array2::from_elem((height, width), false);
        for &(r, c) in pixels {
            if r >= height || c >= width {
                return Err(Error::invalid(format!(
                    "pixel ({r}, {c}) outside {height}x{width} image"
                )));
            }
            cells[[r, c]] = true;
        }
        Ok(Self::classify(cells))
    }

    fn classify(cells: Array2<bool>) -> Self {
        let count = cells.iter().filter(|&&b| b).count();
        let kind = if count == cells.len() {
            InteractionKind::WholeImage
        } else if count == 1 {
            InteractionKind::Click
        } else {
            InteractionKind::Scribble
        };
        Self { cells, kind }
    }

    pub fn kind(&self) -> InteractionKind {
        self.kind
    }

    pub fn dim(&self) -> (usize, usize) {
        self.cells.dim()
    }

    pub fn cells(&self) -> &Array2<bool> {
        &self.cells
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.cells[[row, col]]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    /// Selected cells in row-major order.
    pub fn pixels(&self) -> Vec<(usize, usize)> {
        self.cells
            .indexed_iter()
            .filter_map(|(idx, &on)| on.then_some(idx))
            .collect()
    }

    /// Re-expresses the mask on a larger grid whose top-left part is the
    /// original grid. Whole-image interactions cover the new grid entirely.
    pub fn extend_to(&self, height: usize, width: usize) -> Result<Self> {
        let (h, w) = self.dim();
        if height < h || width < w {
            return Err(Error::invalid("cannot shrink an interaction mask"));
        }
        if self.kind == InteractionKind::WholeImage {
            return Self::whole(height, width);
        }
        let mut cells = Array2::from_elem((height, width), false);
        cells.slice_mut(ndarray::s![..h, ..w]).assign(&self.cells);
        Ok(Self::classify(cells))
    }

    /// Projects onto a grid coarser by `stride`: a coarse cell is selected if
    /// any pixel it covers is selected.
    pub fn project(&self, stride: usize) -> Array2<bool> {
        let (h, w) = self.dim();
        let mut out = Array2::from_elem((h.div_ceil(stride), w.div_ceil(stride)), false);
        for ((r, c), &on) in self.cells.indexed_iter() {
            if on {
                out[[r / stride, c / stride]] = true;
            }
        }
        out
    }

    /// Initial penetration: 1 on touched pixels, 0 elsewhere.
    pub fn indicator(&self) -> Array2<f64> {
        self.cells.mapv(|b| if b { 1.0 } else { 0.0 })
    }
}
