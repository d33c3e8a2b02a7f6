//! Small separable test scene.

use alloc::vec::Vec;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cube::{HsiCube, LabelMap};

pub const SIDE: usize = 20;
pub const BANDS: usize = 32;
pub const CLASSES: usize = 4;
const NOISE: f64 = 0.05;

/// Mean spectrum of class `class` (1-based).
pub fn class_spectrum(class: usize) -> Vec<f64> {
    (0..BANDS)
        .map(|b| {
            let t = b as f64 / BANDS as f64;
            1.0 + 0.3 * class as f64 + 0.5 * libm::sin(6.0 * t + 1.7 * class as f64)
        })
        .collect()
}

/// Class of pixel `(x, y)`: one 10×10 quadrant per class.
pub fn quadrant_class(x: usize, y: usize) -> u16 {
    1 + u16::from(x >= SIDE / 2) + 2 * u16::from(y >= SIDE / 2)
}

/// A 20×20×32 cube of four quadrants, each a class spectrum plus uniform
/// noise of amplitude 0.05, and its fully labeled ground truth.
pub fn quadrants(seed: u64) -> (HsiCube, LabelMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Uniform::new_inclusive(-NOISE, NOISE);
    let means: Vec<Vec<f64>> = (1..=CLASSES).map(class_spectrum).collect();
    let mut pixels = Vec::with_capacity(SIDE * SIDE);
    let mut labels = Vec::with_capacity(SIDE * SIDE);
    for y in 0..SIDE {
        for x in 0..SIDE {
            let c = quadrant_class(x, y);
            labels.push(c);
            pixels.push(
                means[c as usize - 1]
                    .iter()
                    .map(|&m| m + noise.sample(&mut rng))
                    .collect::<Vec<f64>>(),
            );
        }
    }
    let cube = HsiCube::from_pixels(SIDE, SIDE, &pixels).expect("valid synthetic cube");
    let labels = LabelMap::new(SIDE, SIDE, labels).expect("valid synthetic labels");
    (cube, labels)
}
