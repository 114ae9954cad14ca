use super::network::NetworkParameters;
use crate::rng::Rng;
use rand_distr::{Distribution, Normal};

/// Replace each conv layer's weights with i.i.d. Gaussian draws matching
/// that layer's empirical mean and variance. Biases and the classifier
/// are copied unchanged.
pub fn gaussian_resample(reference: &NetworkParameters, rng: &mut Rng) -> NetworkParameters {
    let mut out = reference.clone();
    for layer in &mut out.conv {
        let data = layer.weight.data();
        let n = data.len() as f64;
        let mean = data.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let var = data.iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
        if var == 0.0 {
            continue;
        }
        let normal = Normal::new(mean, var.sqrt()).expect("finite moments");
        for w in layer.weight.data_mut() {
            *w = normal.sample(rng) as f32;
        }
    }
    out
}
