use crate::error::{Error, Result};
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Full-contrast static sinusoidal grating.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GratingSpec {
    /// Orientation in degrees, `[0, 180)`.
    pub theta: f64,
    /// Cycles per image width.
    pub frequency: f64,
    /// Phase in degrees, `[0, 360)`.
    pub phase: f64,
    pub size: usize,
}

impl GratingSpec {
    pub fn new(theta: f64, frequency: f64, phase: f64) -> Self {
        GratingSpec {
            theta,
            frequency,
            phase,
            size: 32,
        }
    }

    /// Luminance at column `x`, row `y`.
    pub fn value(&self, x: usize, y: usize) -> f64 {
        let (sin_t, cos_t) = sin_cos_degrees(self.theta);
        let arg = 2.0 * PI * self.frequency * (x as f64 * cos_t + y as f64 * sin_t)
            / self.size as f64
            + self.phase.to_radians();
        0.5 + 0.5 * arg.sin()
    }
}

/// `sin`/`cos` of an angle in degrees, exact at multiples of 90°.
fn sin_cos_degrees(deg: f64) -> (f64, f64) {
    let d = deg.rem_euclid(360.0);
    if d % 90.0 == 0.0 {
        return match (d / 90.0) as u32 {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        };
    }
    d.to_radians().sin_cos()
}

/// Render `spec` as a `[channels, size, size]` tensor, the same greyscale
/// pattern replicated into every channel.
pub fn generate_grating(spec: &GratingSpec, channels: usize) -> Result<Tensor> {
    if !(spec.frequency > 0.0) || !spec.frequency.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "grating frequency must be positive, got {}",
            spec.frequency
        )));
    }
    if spec.size == 0 || channels == 0 {
        return Err(Error::InvalidArgument("grating size and channels must be positive".into()));
    }
    let s = spec.size;
    let mut plane = Vec::with_capacity(s * s);
    for y in 0..s {
        for x in 0..s {
            plane.push(spec.value(x, y) as f32);
        }
    }
    let mut data = Vec::with_capacity(channels * s * s);
    for _ in 0..channels {
        data.extend_from_slice(&plane);
    }
    Tensor::new(vec![channels, s, s], data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_peak_column() {
        let g = generate_grating(&GratingSpec::new(0.0, 4.0, 0.0), 3).unwrap();
        for c in 0..3 {
            for y in 0..32 {
                assert_eq!(g.get(&[c, y, 2]).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn vertical_is_transpose_of_horizontal() {
        let a = generate_grating(&GratingSpec::new(0.0, 2.0, 30.0), 1).unwrap();
        let b = generate_grating(&GratingSpec::new(90.0, 2.0, 30.0), 1).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                assert_eq!(a.get(&[0, y, x]), b.get(&[0, x, y]));
            }
        }
    }

    #[test]
    fn antiphase_is_complement() {
        let a = generate_grating(&GratingSpec::new(35.0, 1.0, 0.0), 1).unwrap();
        let b = generate_grating(&GratingSpec::new(35.0, 1.0, 180.0), 1).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((1.0 - x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn mean_over_full_periods() {
        for f in [1.0, 2.0, 4.0, 8.0] {
            for theta in [0.0, 90.0] {
                let g = generate_grating(&GratingSpec::new(theta, f, 17.0), 1).unwrap();
                let mean = g.data().iter().map(|&v| f64::from(v)).sum::<f64>() / g.len() as f64;
                assert!((mean - 0.5).abs() < 1e-6, "f={f} θ={theta}: {mean}");
            }
        }
    }

    #[test]
    fn rejects_nonpositive_frequency() {
        assert!(generate_grating(&GratingSpec::new(0.0, 0.0, 0.0), 1).is_err());
        assert!(generate_grating(&GratingSpec::new(0.0, -1.0, 0.0), 1).is_err());
    }
}
