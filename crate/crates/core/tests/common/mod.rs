#![allow(dead_code)]

use dipaint_core::Image;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth in-gamut test image; `seed` changes the palette.
pub fn gradient(height: usize, width: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: [f64; 3] = [rng.gen_range(0.3..0.6), rng.gen_range(0.3..0.6), rng.gen_range(0.3..0.6)];
    let slope: [f64; 3] = [rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)];
    let wave: [f64; 3] = [rng.gen_range(0.0..0.1), rng.gen_range(0.0..0.1), rng.gen_range(0.0..0.1)];
    Image::from_fn(height, width, |r, c| {
        let y = r as f64 / height as f64;
        let x = c as f64 / width as f64;
        std::array::from_fn(|k| base[k] + slope[k] * (x - y) + wave[k] * ((7.0 + k as f64) * (x + 0.5 * y)).sin())
    })
    .unwrap()
}

/// Left half one colour, right half another.
pub fn two_tone(height: usize, width: usize, left: [f64; 3], right: [f64; 3]) -> Image {
    Image::from_fn(height, width, |_, c| if c < width / 2 { left } else { right }).unwrap()
}

pub fn random_field(height: usize, width: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((height, width), |_| rng.gen::<f64>())
}
