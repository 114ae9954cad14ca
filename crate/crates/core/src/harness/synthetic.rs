//! Small labelled RGB images for smoke tests and demos when CIFAR-10 is
//! not available.

use crate::error::Result;
use crate::retinanet::Dataset;
use crate::rng::seeded;
use crate::stimuli::hsl_to_rgb;
use rand::Rng as _;

/// `n` images of `size × size`: class `k` is an oriented sinusoidal
/// grating tinted with hue `36k`, with random phase and pixel noise.
pub fn synthetic_dataset(n: usize, size: usize, seed: u64) -> Result<Dataset> {
    let mut rng = seeded(seed);
    let plane = size * size;
    let mut images = Vec::with_capacity(n * 3 * plane);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let class: u8 = rng.random_range(0..10);
        let tint = hsl_to_rgb(36.0 * f64::from(class), 1.0, 0.5);
        let theta = (18.0 * f64::from(class)).to_radians();
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let freq = 2.0 * std::f64::consts::PI * 2.0 / size as f64;
        let mut img = vec![0.0f32; 3 * plane];
        for y in 0..size {
            for x in 0..size {
                let g = 0.5 + 0.5 * (freq * (x as f64 * theta.cos() + y as f64 * theta.sin()) + phase).sin();
                for c in 0..3 {
                    let noise: f64 = rng.random_range(-0.1..0.1);
                    img[c * plane + y * size + x] = (0.3 * g + 0.6 * g * tint[c] + noise).clamp(0.0, 1.0) as f32;
                }
            }
        }
        images.extend(img);
        labels.push(class);
    }
    Dataset::new(3, size, images, labels)
}
