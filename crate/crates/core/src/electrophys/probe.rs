use crate::error::{Error, Result};
use crate::retinanet::{conv_activations, ArchitectureConfig, LayerName, NetworkParameters};
use crate::stimuli::{baseline_input, BankKind, StimulusBank, StimulusSpec};
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// One filter of one conv layer at one spatial position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub layer: LayerName,
    pub channel: usize,
    pub row: usize,
    pub col: usize,
}

impl CellId {
    pub fn validate(&self, config: &ArchitectureConfig) -> Result<()> {
        let channels = config.layer_channels(self.layer).ok_or_else(|| {
            Error::InvalidArgument(format!("layer {} is not part of this architecture", self.layer))
        })?;
        if self.channel >= channels || self.row >= config.input_size || self.col >= config.input_size {
            return Err(Error::InvalidArgument(format!(
                "cell {}[{}] at ({}, {}) is outside a {}-channel {}x{} map",
                self.layer, self.channel, self.row, self.col, channels, config.input_size, config.input_size
            )));
        }
        Ok(())
    }
}

/// Which positions represent each filter in a population analysis.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellSampling {
    /// One cell per filter at `(⌊H/2⌋, ⌊W/2⌋)`.
    #[default]
    Centre,
    /// Every position of every filter.
    All,
    Positions(Vec<(usize, usize)>),
}

impl CellSampling {
    pub fn cells(&self, config: &ArchitectureConfig, layer: LayerName) -> Result<Vec<CellId>> {
        let channels = config.layer_channels(layer).ok_or_else(|| {
            Error::InvalidArgument(format!("layer {layer} is not part of this architecture"))
        })?;
        let s = config.input_size;
        let positions: Vec<(usize, usize)> = match self {
            CellSampling::Centre => vec![(s / 2, s / 2)],
            CellSampling::All => (0..s).flat_map(|r| (0..s).map(move |c| (r, c))).collect(),
            CellSampling::Positions(p) => p.clone(),
        };
        let mut cells = Vec::with_capacity(channels * positions.len());
        for channel in 0..channels {
            for &(row, col) in &positions {
                let cell = CellId {
                    layer,
                    channel,
                    row,
                    col,
                };
                cell.validate(config)?;
                cells.push(cell);
            }
        }
        Ok(cells)
    }
}

/// A cell's responses over an ordered bank, with its black-input baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct TuningCurve {
    pub kind: BankKind,
    pub stimuli: Arc<[StimulusSpec]>,
    pub pre: Vec<f32>,
    pub post: Vec<f32>,
    pub baseline_pre: f32,
    pub baseline_post: f32,
}

impl TuningCurve {
    pub fn len(&self) -> usize {
        self.post.len()
    }

    pub fn is_empty(&self) -> bool {
        self.post.is_empty()
    }

    pub fn hue_at(&self, i: usize) -> Option<f64> {
        match self.stimuli.get(i)? {
            StimulusSpec::Hue(h) => Some(h.hue),
            StimulusSpec::Grating(_) => None,
        }
    }
}

const PROBE_BATCH: usize = 32;

pub fn probe_cell(params: &NetworkParameters, cell: CellId, bank: &StimulusBank) -> Result<TuningCurve> {
    Ok(probe_cells(params, &[cell], bank)?.remove(0))
}

/// Tuning curves for many cells from a single sweep of the bank.
pub fn probe_cells(
    params: &NetworkParameters,
    cells: &[CellId],
    bank: &StimulusBank,
) -> Result<Vec<TuningCurve>> {
    let cfg = &params.config;
    if bank.is_empty() {
        return Err(Error::InvalidArgument("stimulus bank is empty".into()));
    }
    if bank.channels != cfg.input_channels || bank.size != cfg.input_size {
        return Err(Error::Shape(format!(
            "bank renders [{}, {}, {}] inputs but the network takes [{}, {}, {}]",
            bank.channels, bank.size, bank.size, cfg.input_channels, cfg.input_size, cfg.input_size
        )));
    }
    for cell in cells {
        cell.validate(cfg)?;
    }
    let Some(deepest) = cells.iter().map(|c| c.layer).max() else {
        return Ok(Vec::new());
    };
    let size = cfg.input_size;
    let plane = size * size;
    let read = |acts: &[crate::retinanet::ConvActivation], n: usize, cell: &CellId| {
        let layer = &acts[cell.layer.conv_index()];
        let channels = layer.pre.shape()[1];
        let off = ((n * channels + cell.channel) * plane) + cell.row * size + cell.col;
        (layer.pre.data()[off], layer.post.data()[off])
    };

    let baseline = Tensor::stack(&[&baseline_input(cfg.input_channels, size)])?;
    let base_acts = conv_activations(params, &baseline, deepest)?;
    let stimuli: Arc<[StimulusSpec]> = bank.specs.clone().into();
    let mut curves: Vec<TuningCurve> = cells
        .iter()
        .map(|cell| {
            let (bp, bq) = read(&base_acts, 0, cell);
            TuningCurve {
                kind: bank.kind,
                stimuli: Arc::clone(&stimuli),
                pre: Vec::with_capacity(bank.len()),
                post: Vec::with_capacity(bank.len()),
                baseline_pre: bp,
                baseline_post: bq,
            }
        })
        .collect();

    for chunk in bank.inputs.chunks(PROBE_BATCH) {
        let refs: Vec<&Tensor> = chunk.iter().collect();
        let batch = Tensor::stack(&refs)?;
        let acts = conv_activations(params, &batch, deepest)?;
        for n in 0..chunk.len() {
            for (curve, cell) in curves.iter_mut().zip(cells) {
                let (p, q) = read(&acts, n, cell);
                curve.pre.push(p);
                curve.post.push(q);
            }
        }
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electrophys::{classify, most_excitatory_hue, most_inhibitory_hue, OpponencyClass};
    use crate::stimuli::{build_hue_bank, build_spatial_bank, SpatialGrid};
    use crate::testutil::toy_network;

    fn cell() -> CellId {
        CellId {
            layer: LayerName::Retina1,
            channel: 0,
            row: 0,
            col: 0,
        }
    }

    #[test]
    fn red_minus_green_cell() {
        let net = toy_network([1.0, -1.0, 0.0], 0.5, 2);
        let curve = probe_cell(&net, cell(), &build_hue_bank(2, 3).unwrap()).unwrap();
        assert_eq!(curve.baseline_post, 0.5);
        assert_eq!(curve.post[0], 1.5);
        assert_eq!(curve.post[120], 0.0);
        assert_eq!(classify(&curve), OpponencyClass::Opponent);
    }

    #[test]
    fn luminance_cell_on_grating() {
        let net = toy_network([1.0, 1.0, 1.0], 0.0, 2);
        let grid = SpatialGrid {
            thetas: vec![0.0],
            frequencies: vec![1.0],
            phases: vec![0.0],
            size: 2,
        };
        let curve = probe_cell(&net, cell(), &build_spatial_bank(&grid, 3).unwrap()).unwrap();
        assert!((curve.post[0] - 1.5).abs() < 1e-6);
        assert_eq!(classify(&curve), OpponencyClass::NonOpponent);
    }

    #[test]
    fn silent_cell_is_unresponsive() {
        let net = toy_network([0.0; 3], -1.0, 2);
        let curve = probe_cell(&net, cell(), &build_hue_bank(2, 3).unwrap()).unwrap();
        assert!(curve.post.iter().all(|&v| v == 0.0));
        assert_eq!(classify(&curve), OpponencyClass::Unresponsive);
    }

    #[test]
    fn extreme_hues() {
        let bank = build_hue_bank(2, 3).unwrap();
        let inh = probe_cell(&toy_network([1.0, -1.0, 0.0], 0.0, 2), cell(), &bank).unwrap();
        assert_eq!(most_inhibitory_hue(&inh).unwrap().hue, 120.0);
        let exc = probe_cell(&toy_network([1.0, 0.0, 0.0], 0.0, 2), cell(), &bank).unwrap();
        assert_eq!(most_excitatory_hue(&exc).unwrap().hue, 0.0);
    }

    #[test]
    fn batch_probing_matches_single() {
        let net = toy_network([0.3, -0.7, 0.2], 0.1, 2);
        let bank = build_hue_bank(2, 3).unwrap();
        let cells = CellSampling::All.cells(&net.config, LayerName::Retina2).unwrap();
        let all = probe_cells(&net, &cells, &bank).unwrap();
        for (c, curve) in cells.iter().zip(&all) {
            assert_eq!(&probe_cell(&net, *c, &bank).unwrap(), curve);
        }
    }

    #[test]
    fn bad_requests_rejected() {
        let net = toy_network([1.0; 3], 0.0, 2);
        let bank = build_hue_bank(4, 3).unwrap();
        assert!(matches!(probe_cell(&net, cell(), &bank), Err(Error::Shape(_))));
        let bank = build_hue_bank(2, 3).unwrap();
        let off = CellId { row: 5, ..cell() };
        assert!(probe_cell(&net, off, &bank).is_err());
        let missing = CellId {
            layer: LayerName::Ventral(1),
            ..cell()
        };
        assert!(probe_cell(&net, missing, &bank).is_err());
        assert!(CellSampling::Centre.cells(&net.config, LayerName::Ventral(1)).is_err());
    }
}
