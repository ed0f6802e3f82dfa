//! RGB images with values in `[0, 1]`, PNG I/O and CIE L*a*b* conversion.

use std::io::Cursor;
use std::path::Path;
use std::sync::OnceLock;

use image::{ImageFormat, Rgb, RgbImage};
use ndarray::Array3;

use crate::error::{Error, Result};

/// Smallest accepted extent on either axis.
pub const MIN_EXTENT: usize = 8;

/// An sRGB image stored row-major with interleaved channels.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height < MIN_EXTENT || width < MIN_EXTENT {
            return Err(Error::invalid(format!(
                "image must be at least {MIN_EXTENT}x{MIN_EXTENT}, got {height}x{width}"
            )));
        }
        if data.len() != height * width * 3 {
            return Err(Error::invalid(format!(
                "expected {} samples, got {}",
                height * width * 3,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("sample {v} outside [0, 1]")));
        }
        Ok(Self { height, width, data })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * 3);
        for row in 0..height {
            for col in 0..width {
                data.extend(f(row, col).iter().map(|v| v.clamp(0.0, 1.0)));
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory(bytes)?.to_rgb8();
        Self::from_rgb8(&img)
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::decode_png(&bytes)
    }

    fn from_rgb8(img: &RgbImage) -> Result<Self> {
        let (w, h) = img.dimensions();
        let data = img.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect();
        Self::new(h as usize, w as usize, data)
    }

    pub fn to_rgb8(&self) -> RgbImage {
        RgbImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            let p = self.pixel(y as usize, x as usize);
            Rgb(p.map(quantize))
        })
    }

    /// Encodes as an 8-bit sRGB PNG. Identical images always give identical bytes.
    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        self.to_rgb8().write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode_png()?)?;
        Ok(())
    }

    /// Pads bottom and right edges by mirror reflection so both extents become
    /// multiples of `multiple`. Pixel coordinates of the original are unchanged.
    pub fn pad_reflect(&self, multiple: usize) -> Image {
        let height = self.height.div_ceil(multiple) * multiple;
        let width = self.width.div_ceil(multiple) * multiple;
        if height == self.height && width == self.width {
            return self.clone();
        }
        let mut data = Vec::with_capacity(height * width * 3);
        for row in 0..height {
            let src_row = reflect(row, self.height);
            for col in 0..width {
                data.extend_from_slice(&self.pixel(src_row, reflect(col, self.width)));
            }
        }
        Image { height, width, data }
    }

    /// Top-left crop.
    pub fn crop(&self, height: usize, width: usize) -> Result<Image> {
        if height > self.height || width > self.width {
            return Err(Error::invalid("crop larger than image"));
        }
        let mut data = Vec::with_capacity(height * width * 3);
        for row in 0..height {
            let start = row * self.width * 3;
            data.extend_from_slice(&self.data[start..start + width * 3]);
        }
        Image::new(height, width, data)
    }

    /// Channel planes `[L*, a*, b*] / 100`, shape `(3, height, width)`.
    pub fn to_lab_planes(&self) -> Array3<f64> {
        let mut out = Array3::zeros((3, self.height, self.width));
        for row in 0..self.height {
            for col in 0..self.width {
                let lab = rgb_to_lab(self.pixel(row, col));
                for (c, v) in lab.iter().enumerate() {
                    out[[c, row, col]] = v / LAB_SCALE;
                }
            }
        }
        out
    }

    /// Inverse of [`Image::to_lab_planes`]; out-of-gamut colors are clipped.
    pub fn from_lab_planes(planes: &Array3<f64>) -> Result<Image> {
        let (channels, height, width) = planes.dim();
        if channels != 3 {
            return Err(Error::invalid(format!("expected 3 Lab planes, got {channels}")));
        }
        Image::from_fn(height, width, |row, col| {
            lab_to_rgb([
                planes[[0, row, col]] * LAB_SCALE,
                planes[[1, row, col]] * LAB_SCALE,
                planes[[2, row, col]] * LAB_SCALE,
            ])
        })
    }

    /// Planar `(3, height, width)` copy of the RGB samples.
    pub fn to_planes(&self) -> Array3<f64> {
        Array3::from_shape_fn((3, self.height, self.width), |(c, row, col)| {
            self.data[(row * self.width + col) * 3 + c]
        })
    }

    pub fn from_planes(planes: &Array3<f64>) -> Result<Image> {
        let (channels, height, width) = planes.dim();
        if channels != 3 {
            return Err(Error::invalid(format!("expected 3 planes, got {channels}")));
        }
        Image::from_fn(height, width, |row, col| {
            [planes[[0, row, col]], planes[[1, row, col]], planes[[2, row, col]]]
        })
    }
}

/// Lab planes are stored divided by this so all three channels are O(1).
pub const LAB_SCALE: f64 = 100.0;

/// sRGB (D65) to linear RGB to XYZ matrix.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

/// D65 reference white, the image of RGB (1, 1, 1).
fn white() -> [f64; 3] {
    RGB_TO_XYZ.map(|row| row.iter().sum())
}

fn xyz_to_rgb_matrix() -> &'static [[f64; 3]; 3] {
    static INV: OnceLock<[[f64; 3]; 3]> = OnceLock::new();
    INV.get_or_init(|| invert3(&RGB_TO_XYZ))
}

fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let cof = |r: usize, c: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
        m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]
    };
    let det = m[0][0] * cof(0, 0) + m[0][1] * cof(0, 1) + m[0][2] * cof(0, 2);
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = cof(c, r) / det;
        }
    }
    inv
}

fn mul3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    m.map(|row| row[0] * v[0] + row[1] * v[1] + row[2] * v[2])
}

fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.040_45 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.003_130_8 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

const LAB_EPSILON: f64 = 216.0 / 24389.0;
const LAB_KAPPA: f64 = 24389.0 / 27.0;

fn lab_f(t: f64) -> f64 {
    if t > LAB_EPSILON {
        t.cbrt()
    } else {
        (LAB_KAPPA * t + 16.0) / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    let t = f * f * f;
    if t > LAB_EPSILON {
        t
    } else {
        (116.0 * f - 16.0) / LAB_KAPPA
    }
}

/// sRGB in `[0, 1]` to CIE L*a*b* (D65).
pub fn rgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let xyz = mul3(&RGB_TO_XYZ, rgb.map(srgb_to_linear));
    let wp = white();
    let [fx, fy, fz] = [0, 1, 2].map(|i| lab_f(xyz[i] / wp[i]));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// CIE L*a*b* (D65) to sRGB, clipped into `[0, 1]`.
pub fn lab_to_rgb(lab: [f64; 3]) -> [f64; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let wp = white();
    let xyz = [fx, fy, fz].map(lab_f_inv);
    let xyz = [xyz[0] * wp[0], xyz[1] * wp[1], xyz[2] * wp[2]];
    mul3(xyz_to_rgb_matrix(), xyz)
        .map(|v| if v.is_finite() { linear_to_srgb(v.clamp(0.0, 1.0)) } else { 0.0 })
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn reflect(i: usize, n: usize) -> usize {
    if i < n {
        i
    } else {
        2 * (n - 1) - i
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(h: usize, w: usize) -> Image {
        Image::from_fn(h, w, |r, c| {
            [r as f64 / h as f64, c as f64 / w as f64, ((r + c) % 7) as f64 / 7.0]
        })
        .unwrap()
    }

    #[test]
    fn rejects_small_and_out_of_range() {
        assert!(Image::new(4, 8, vec![0.0; 96]).is_err());
        let mut data = vec![0.5; 8 * 8 * 3];
        data[5] = 1.5;
        assert!(Image::new(8, 8, data).is_err());
    }

    #[test]
    fn png_round_trip_is_exact_on_8bit_values() {
        let img = Image::from_fn(9, 11, |r, c| {
            [(r * 20) as f64 / 255.0, (c * 13) as f64 / 255.0, 1.0]
        })
        .unwrap();
        let back = Image::decode_png(&img.encode_png().unwrap()).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn pad_then_crop_restores() {
        let img = gradient(13, 10);
        let padded = img.pad_reflect(8);
        assert_eq!((padded.height(), padded.width()), (16, 16));
        // mirror without edge duplication
        assert_eq!(padded.pixel(13, 0), img.pixel(11, 0));
        assert_eq!(padded.pixel(0, 10), img.pixel(0, 8));
        assert_eq!(padded.crop(13, 10).unwrap(), img);
    }

    #[test]
    fn lab_round_trip() {
        let img = gradient(8, 8);
        let back = Image::from_lab_planes(&img.to_lab_planes()).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn lab_reference_values() {
        let white = rgb_to_lab([1.0, 1.0, 1.0]);
        assert!((white[0] - 100.0).abs() < 1e-6);
        assert!(white[1].abs() < 1e-12 && white[2].abs() < 1e-12);
        // sRGB red, standard published value
        let red = rgb_to_lab([1.0, 0.0, 0.0]);
        assert!((red[0] - 53.24).abs() < 0.01 && (red[1] - 80.09).abs() < 0.01 && (red[2] - 67.20).abs() < 0.01);
        let black = rgb_to_lab([0.0, 0.0, 0.0]);
        assert!(black[0].abs() < 1e-9);
    }
}
