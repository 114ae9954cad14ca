use super::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;
use rand::distr::{Distribution, Uniform};

/// Glorot/Xavier uniform initialisation on `(-a, a)`, `a = sqrt(6 / (fan_in + fan_out))`.
///
/// Conv kernels `[C_out, C_in, k, k]` count `k²` into both fans; matrices
/// `[F, G]` use `fan_in = F`, `fan_out = G`.
pub fn xavier_uniform(shape: &[usize], rng: &mut Rng) -> Result<Tensor> {
    let (fan_in, fan_out) = match *shape {
        [c_out, c_in, kh, kw] => (c_in * kh * kw, c_out * kh * kw),
        [f, g] => (f, g),
        _ => {
            return Err(Error::Shape(format!(
                "xavier init expects a conv kernel or a matrix, got {shape:?}"
            )))
        }
    };
    if shape.iter().any(|&d| d == 0) {
        return Err(Error::Shape(format!("xavier init on zero-sized shape {shape:?}")));
    }
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt() as f32;
    let dist = Uniform::new(-bound, bound).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(Tensor::from_fn(shape, |_| loop {
        let v = dist.sample(rng);
        if v > -bound {
            break v;
        }
    }))
}
