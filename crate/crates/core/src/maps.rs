//! Validated per-pixel scalar maps.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Aggregated feature similarity of every pixel to an interaction, in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMap(Array2<f64>);

impl SimilarityMap {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("similarity {v} outside [0, 1]")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn dim(&self) -> (usize, usize) {
        self.0.dim()
    }
}

/// Fluid concentration per pixel, the action scope of one interaction.
#[derive(Clone, Debug, PartialEq)]
pub struct PenetrationMap(Array2<f64>);

impl PenetrationMap {
    /// Accepts values in `[0, 1]` up to a `1e-9` solver slack, which is clipped.
    pub fn new(mut values: Array2<f64>) -> Result<Self> {
        const SLACK: f64 = 1e-9;
        if let Some(v) = values
            .iter()
            .find(|v| !v.is_finite() || **v < -SLACK || **v > 1.0 + SLACK)
        {
            return Err(Error::invalid(format!("penetration {v} outside [0, 1]")));
        }
        values.mapv_inplace(|v| v.clamp(0.0, 1.0));
        Ok(Self(values))
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self(Array2::zeros((height, width)))
    }

    pub fn ones(height: usize, width: usize) -> Self {
        Self(Array2::ones((height, width)))
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn dim(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// Top-left `height` x `width` window.
    pub fn crop(&self, height: usize, width: usize) -> Result<Self> {
        let (h, w) = self.dim();
        if height > h || width > w {
            return Err(Error::invalid(format!("cannot crop {h}x{w} to {height}x{width}")));
        }
        Ok(Self(self.0.slice(ndarray::s![..height, ..width]).to_owned()))
    }

    /// Rescales so the peak is 1. A map with no mass is returned unchanged.
    pub fn normalized(&self) -> Self {
        let peak = self.max();
        if peak > 0.0 {
            Self(self.0.mapv(|v| v / peak))
        } else {
            self.clone()
        }
    }
}
