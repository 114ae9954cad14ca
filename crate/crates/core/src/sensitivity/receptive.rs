use crate::electrophys::CellId;
use crate::error::Result;
use crate::retinanet::NetworkParameters;
use crate::tensor::{Tape, Tensor};
use serde::{Deserialize, Serialize};

/// Value of every pixel of the near-blank probe input.
pub const BLANK_LEVEL: f32 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceptiveFieldMap {
    pub cell: CellId,
    /// `[C, S, S]` gradient of the cell's output.
    pub raw: Tensor,
    /// `raw` min-max scaled into `[0, 1]`; all zeros for a constant map.
    pub normalised: Tensor,
    pub min: f32,
    pub max: f32,
    /// The cell sat at or below the ReLU kink for the blank input.
    pub clipped: bool,
}

pub fn receptive_field(params: &NetworkParameters, cell: CellId) -> Result<ReceptiveFieldMap> {
    let cfg = &params.config;
    cell.validate(cfg)?;
    let (c, s) = (cfg.input_channels, cfg.input_size);
    let mut tape = Tape::new();
    let input = tape.leaf(Tensor::full(&[1, c, s, s], BLANK_LEVEL));
    let net = params.bind(&mut tape, false);
    let acts = net.forward(&mut tape, input, Some(cell.layer))?;
    let (pre, post) = (acts.pre[cell.layer.conv_index()], acts.post[cell.layer.conv_index()]);
    let channels = tape.value(post).shape()[1];
    let offset = (cell.channel * s + cell.row) * s + cell.col;

    let raw = if tape.value(pre).data()[offset] <= 0.0 {
        None
    } else {
        let mut seed = Tensor::zeros(&[1, channels, s, s]);
        seed.data_mut()[offset] = 1.0;
        let mut grads = tape.backward_with_seed(post, seed)?;
        let g = grads.take(input).unwrap_or_else(|| Tensor::zeros(&[1, c, s, s]));
        Some(g.reshape(&[c, s, s])?)
    };
    let clipped = raw.is_none();
    let raw = raw.unwrap_or_else(|| Tensor::zeros(&[c, s, s]));
    let min = raw.data().iter().copied().fold(f32::INFINITY, f32::min);
    let max = raw.data().iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let normalised = if max > min {
        raw.map(|v| (v - min) / (max - min))
    } else {
        Tensor::zeros(raw.shape())
    };
    Ok(ReceptiveFieldMap {
        cell,
        raw,
        normalised,
        min,
        max,
        clipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retinanet::{build_network, ArchitectureConfig, LayerName};
    use crate::testutil::toy_network;

    fn cell(layer: LayerName, row: usize, col: usize) -> CellId {
        CellId {
            layer,
            channel: 0,
            row,
            col,
        }
    }

    #[test]
    fn one_by_one_cell() {
        let net = toy_network([1.0, -1.0, 0.0], 0.5, 3);
        let rf = receptive_field(&net, cell(LayerName::Retina1, 1, 2)).unwrap();
        assert!(!rf.clipped);
        for ch in 0..3 {
            for r in 0..3 {
                for c in 0..3 {
                    let expect = if (r, c) == (1, 2) { [1.0, -1.0, 0.0][ch] } else { 0.0 };
                    assert_eq!(rf.raw.get(&[ch, r, c]), Some(expect));
                }
            }
        }
        assert_eq!((rf.min, rf.max), (-1.0, 1.0));
        assert_eq!(rf.normalised.data().iter().copied().fold(f32::INFINITY, f32::min), 0.0);
        assert_eq!(rf.normalised.data().iter().copied().fold(0.0, f32::max), 1.0);
    }

    #[test]
    fn dead_cell_is_clipped() {
        let net = toy_network([0.0; 3], -1.0, 3);
        let rf = receptive_field(&net, cell(LayerName::Retina1, 0, 0)).unwrap();
        assert!(rf.clipped);
        assert!(rf.raw.data().iter().all(|&v| v == 0.0));
        assert!(rf.normalised.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_path_gives_composed_filter() {
        // Two 3x3 layers with positive weights and biases stay linear; the map
        // is the full correlation of the two kernels.
        let config = ArchitectureConfig {
            bottleneck_width: 1,
            ventral_depth: 0,
            input_channels: 1,
            base_channels: 1,
            kernel_size: 3,
            hidden_units: 2,
            num_classes: 2,
            input_size: 9,
        };
        let mut net = build_network(&config, 3).unwrap();
        let k1: Vec<f32> = (1..=9).map(|v| v as f32 * 0.1).collect();
        let k2: Vec<f32> = (1..=9).map(|v| (10 - v) as f32 * 0.05).collect();
        net.conv[0].weight = Tensor::new(vec![1, 1, 3, 3], k1.clone()).unwrap();
        net.conv[1].weight = Tensor::new(vec![1, 1, 3, 3], k2.clone()).unwrap();
        net.conv[0].bias = Tensor::new(vec![1], vec![0.1]).unwrap();
        net.conv[1].bias = Tensor::new(vec![1], vec![0.1]).unwrap();
        let rf = receptive_field(&net, cell(LayerName::Retina2, 4, 4)).unwrap();
        let mut composed = [[0.0f32; 5]; 5];
        for (a, b) in (0..3).flat_map(|a| (0..3).map(move |b| (a, b))) {
            for (c, d) in (0..3).flat_map(|c| (0..3).map(move |d| (c, d))) {
                composed[a + c][b + d] += k2[a * 3 + b] * k1[c * 3 + d];
            }
        }
        for r in 0..9 {
            for c in 0..9 {
                let expect = if (2..7).contains(&r) && (2..7).contains(&c) { composed[r - 2][c - 2] } else { 0.0 };
                assert!((rf.raw.get(&[0, r, c]).unwrap() - expect).abs() < 1e-6, "({r},{c})");
            }
        }
    }

    #[test]
    fn invalid_cell_rejected() {
        let net = toy_network([1.0; 3], 0.0, 3);
        assert!(receptive_field(&net, cell(LayerName::Ventral(1), 0, 0)).is_err());
        assert!(receptive_field(&net, cell(LayerName::Retina1, 3, 0)).is_err());
    }
}
