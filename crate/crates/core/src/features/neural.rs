//! Convolutional encoder/decoder forward passes from ISTC weights.
//!
//! Tensor names: `enc.stage{k}.conv{j}.kernel` with shape `[out, in, kh, kw]`
//! and `enc.stage{k}.conv{j}.bias` with shape `[out]`, numbered from 1 in
//! execution order; the decoder uses the same scheme under `dec.`. Encoder
//! stages after the first begin with 2x2 max pooling, and every encoder
//! convolution is rectified. The feature tapped from each stage is the output
//! of its first convolution. Decoder stages after the first begin with 2x
//! nearest-neighbor upsampling; every decoder convolution except the last is
//! rectified.

use ndarray::{s, Array2, Array3, ArrayView3, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::TensorContainer;

pub const ENCODER_STAGES: usize = 4;
pub const DECODER_STAGES: usize = 4;

#[derive(Clone, Debug)]
struct Conv {
    out_channels: usize,
    in_channels: usize,
    size: usize,
    /// `[out][in][ky][kx]`
    kernel: Vec<f64>,
    bias: Vec<f64>,
}

impl Conv {
    fn load(weights: &TensorContainer, prefix: &str) -> Result<Option<Self>> {
        let Some(kernel) = weights.get(&format!("{prefix}.kernel")) else {
            return Ok(None);
        };
        let bias = weights
            .get(&format!("{prefix}.bias"))
            .ok_or_else(|| Error::config(format!("{prefix}.bias missing")))?;
        let &[out_channels, in_channels, kh, kw] = kernel.shape() else {
            return Err(Error::config(format!("{prefix}.kernel must have rank 4")));
        };
        if kh != kw || kh % 2 == 0 {
            return Err(Error::config(format!("{prefix}.kernel must be square with odd size")));
        }
        if bias.shape() != [out_channels] {
            return Err(Error::config(format!(
                "{prefix}.bias shape {:?} does not match {out_channels} outputs",
                bias.shape()
            )));
        }
        Ok(Some(Self {
            out_channels,
            in_channels,
            size: kh,
            kernel: kernel.data().iter().map(|&v| f64::from(v)).collect(),
            bias: bias.data().iter().map(|&v| f64::from(v)).collect(),
        }))
    }

    fn forward(&self, input: ArrayView3<'_, f64>, rectify: bool) -> Result<Array3<f64>> {
        let (channels, h, w) = input.dim();
        if channels != self.in_channels {
            return Err(Error::config(format!(
                "convolution expects {} input channels, got {channels}",
                self.in_channels
            )));
        }
        let pad = self.size / 2;
        let padded: Vec<Array2<f64>> = input
            .axis_iter(Axis(0))
            .map(|plane| reflect_pad(plane, pad))
            .collect();
        let k = self.size;
        let planes: Vec<Array2<f64>> = (0..self.out_channels)
            .into_par_iter()
            .map(|o| {
                let mut acc = Array2::from_elem((h, w), self.bias[o]);
                for (i, src) in padded.iter().enumerate() {
                    for ky in 0..k {
                        for kx in 0..k {
                            let wt = self.kernel[((o * self.in_channels + i) * k + ky) * k + kx];
                            if wt != 0.0 {
                                acc.scaled_add(wt, &src.slice(s![ky..ky + h, kx..kx + w]));
                            }
                        }
                    }
                }
                if rectify {
                    acc.mapv_inplace(|v| v.max(0.0));
                }
                acc
            })
            .collect();
        let mut out = Array3::zeros((self.out_channels, h, w));
        for (o, plane) in planes.into_iter().enumerate() {
            out.index_axis_mut(Axis(0), o).assign(&plane);
        }
        Ok(out)
    }
}

fn reflect_pad(plane: ndarray::ArrayView2<'_, f64>, pad: usize) -> Array2<f64> {
    let (h, w) = plane.dim();
    let idx = |i: isize, n: usize| -> usize {
        if n == 1 {
            return 0;
        }
        let n = n as isize;
        let mut i = i;
        while i < 0 || i >= n {
            i = if i < 0 { -i } else { 2 * (n - 1) - i };
        }
        i as usize
    };
    Array2::from_shape_fn((h + 2 * pad, w + 2 * pad), |(r, c)| {
        plane[[idx(r as isize - pad as isize, h), idx(c as isize - pad as isize, w)]]
    })
}

fn max_pool2(x: &Array3<f64>) -> Array3<f64> {
    let (c, h, w) = x.dim();
    Array3::from_shape_fn((c, h / 2, w / 2), |(k, r, col)| {
        let (r2, c2) = (2 * r, 2 * col);
        x[[k, r2, c2]].max(x[[k, r2 + 1, c2]]).max(x[[k, r2, c2 + 1]]).max(x[[k, r2 + 1, c2 + 1]])
    })
}

fn upsample_nearest2(x: &Array3<f64>) -> Array3<f64> {
    let (c, h, w) = x.dim();
    Array3::from_shape_fn((c, 2 * h, 2 * w), |(k, r, col)| x[[k, r / 2, col / 2]])
}

/// Encoder and decoder loaded from a tensor container.
#[derive(Clone, Debug)]
pub struct NeuralNet {
    encoder: Vec<Vec<Conv>>,
    decoder: Vec<Vec<Conv>>,
}

impl NeuralNet {
    pub fn from_container(weights: &TensorContainer) -> Result<Self> {
        let encoder = load_stages(weights, "enc")?;
        let decoder = load_stages(weights, "dec")?;
        if encoder.is_empty() {
            return Err(Error::config("no encoder weights (enc.stage1.conv1.kernel)"));
        }
        check_chain(&encoder, "encoder")?;
        check_chain(&decoder, "decoder")?;
        if let (Some(first), Some(last_stage)) = (decoder.first(), encoder.last()) {
            let tapped = last_stage[0].out_channels;
            if first[0].in_channels != tapped {
                return Err(Error::config(format!(
                    "decoder consumes {} channels but the last encoder stage yields {tapped}",
                    first[0].in_channels
                )));
            }
        }
        Ok(Self { encoder, decoder })
    }

    pub fn encoder_stages(&self) -> usize {
        self.encoder.len()
    }

    pub fn decoder_stages(&self) -> usize {
        self.decoder.len()
    }

    pub fn input_channels(&self) -> usize {
        self.encoder[0][0].in_channels
    }

    /// Channels of the deepest tapped feature.
    pub fn feature_channels(&self) -> usize {
        self.encoder.last().expect("non-empty encoder")[0].out_channels
    }

    /// Tapped feature of every encoder stage, shallowest first.
    pub fn encode_tensor(&self, input: &Array3<f64>) -> Result<Vec<Array3<f64>>> {
        let mut taps = Vec::with_capacity(self.encoder.len());
        let mut x = input.clone();
        for (k, stage) in self.encoder.iter().enumerate() {
            if k > 0 {
                let (_, h, w) = x.dim();
                if h < 2 || w < 2 {
                    return Err(Error::config("input too small for the encoder's pooling plan"));
                }
                x = max_pool2(&x);
            }
            for (j, conv) in stage.iter().enumerate() {
                x = conv.forward(x.view(), true)?;
                if j == 0 {
                    taps.push(x.clone());
                }
            }
        }
        Ok(taps)
    }

    /// Decodes deepest-stage features; output is `2^(stages-1)` times larger.
    pub fn decode_tensor(&self, features: &Array3<f64>) -> Result<Array3<f64>> {
        if self.decoder.is_empty() {
            return Err(Error::config("no decoder weights (dec.stage1.conv1.kernel)"));
        }
        let last_stage = self.decoder.len() - 1;
        let mut x = features.clone();
        for (k, stage) in self.decoder.iter().enumerate() {
            if k > 0 {
                x = upsample_nearest2(&x);
            }
            for (j, conv) in stage.iter().enumerate() {
                let last = k == last_stage && j + 1 == stage.len();
                x = conv.forward(x.view(), !last)?;
            }
        }
        Ok(x)
    }
}

fn load_stages(weights: &TensorContainer, prefix: &str) -> Result<Vec<Vec<Conv>>> {
    let mut stages = Vec::new();
    for k in 1.. {
        let mut convs = Vec::new();
        for j in 1.. {
            match Conv::load(weights, &format!("{prefix}.stage{k}.conv{j}"))? {
                Some(conv) => convs.push(conv),
                None => break,
            }
        }
        if convs.is_empty() {
            break;
        }
        stages.push(convs);
    }
    Ok(stages)
}

fn check_chain(stages: &[Vec<Conv>], what: &str) -> Result<()> {
    let mut prev: Option<usize> = None;
    for conv in stages.iter().flatten() {
        if let Some(p) = prev {
            if conv.in_channels != p {
                return Err(Error::config(format!(
                    "{what}: convolution expects {} channels but receives {p}",
                    conv.in_channels
                )));
            }
        }
        prev = Some(conv.out_channels);
    }
    Ok(())
}
