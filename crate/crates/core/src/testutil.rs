use crate::retinanet::{build_network, ArchitectureConfig, NetworkParameters};
use crate::tensor::Tensor;

/// A 1x1-kernel net with a single Retina1 filter over RGB.
pub fn toy_network(weights: [f32; 3], bias: f32, size: usize) -> NetworkParameters {
    let config = ArchitectureConfig {
        bottleneck_width: 1,
        ventral_depth: 0,
        input_channels: 3,
        base_channels: 1,
        kernel_size: 1,
        hidden_units: 2,
        num_classes: 2,
        input_size: size,
    };
    let mut params = build_network(&config, 0).unwrap();
    params.conv[0].weight = Tensor::new(vec![1, 3, 1, 1], weights.to_vec()).unwrap();
    params.conv[0].bias = Tensor::new(vec![1], vec![bias]).unwrap();
    params
}
