use super::grating::{generate_grating, GratingSpec};
use super::transforms::{encode_for_network, generate_hue_field, HueStimulusSpec};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BankKind {
    Spatial,
    Hue,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StimulusSpec {
    Grating(GratingSpec),
    Hue(HueStimulusSpec),
}

impl StimulusSpec {
    fn describe(&self) -> (&'static str, String) {
        match self {
            StimulusSpec::Grating(g) => (
                "grating",
                format!("theta={};frequency={};phase={}", g.theta, g.frequency, g.phase),
            ),
            StimulusSpec::Hue(h) => (
                "hue",
                format!("hue={};saturation={};lightness={}", h.hue, h.saturation, h.lightness),
            ),
        }
    }
}

/// Orientation × frequency × phase grid for the spatial bank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpatialGrid {
    pub thetas: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub phases: Vec<f64>,
    pub size: usize,
}

impl Default for SpatialGrid {
    fn default() -> Self {
        SpatialGrid {
            thetas: (0..36).map(|i| f64::from(i) * 5.0).collect(),
            frequencies: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            phases: vec![0.0, 90.0, 180.0, 270.0],
            size: 32,
        }
    }
}

/// Ordered stimuli together with their rendered network inputs.
#[derive(Clone, Debug)]
pub struct StimulusBank {
    pub kind: BankKind,
    pub specs: Vec<StimulusSpec>,
    /// `[C, S, S]` inputs in the encoding of the target network.
    pub inputs: Vec<Tensor>,
    pub channels: usize,
    pub size: usize,
}

impl StimulusBank {
    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn hue(&self, i: usize) -> Option<f64> {
        match self.specs.get(i)? {
            StimulusSpec::Hue(h) => Some(h.hue),
            StimulusSpec::Grating(_) => None,
        }
    }

    pub fn grating(&self, i: usize) -> Option<GratingSpec> {
        match self.specs.get(i)? {
            StimulusSpec::Grating(g) => Some(*g),
            StimulusSpec::Hue(_) => None,
        }
    }

    /// Write every input as raw little-endian `f32` plus an `index.tsv`
    /// listing `kind`, `parameters` and `file` per stimulus.
    pub fn export(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut index = String::from("kind\tparameters\tfile\n");
        for (i, (spec, input)) in self.specs.iter().zip(&self.inputs).enumerate() {
            let file = format!("stimulus_{i:04}.f32");
            let bytes: Vec<u8> = input.data().iter().flat_map(|v| v.to_le_bytes()).collect();
            fs::write(dir.join(&file), bytes)?;
            let (kind, params) = spec.describe();
            let shape = input
                .shape()
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join("x");
            writeln!(index, "{kind}\t{params};shape={shape}\t{file}").expect("write to string");
        }
        fs::write(dir.join("index.tsv"), index)?;
        Ok(())
    }
}

pub fn build_spatial_bank(grid: &SpatialGrid, channels: usize) -> Result<StimulusBank> {
    if grid.thetas.is_empty() || grid.frequencies.is_empty() || grid.phases.is_empty() {
        return Err(Error::InvalidArgument("spatial grid has an empty axis".into()));
    }
    let mut specs = Vec::new();
    let mut inputs = Vec::new();
    for &theta in &grid.thetas {
        for &frequency in &grid.frequencies {
            for &phase in &grid.phases {
                let spec = GratingSpec {
                    theta,
                    frequency,
                    phase,
                    size: grid.size,
                };
                inputs.push(generate_grating(&spec, channels)?);
                specs.push(StimulusSpec::Grating(spec));
            }
        }
    }
    Ok(StimulusBank {
        kind: BankKind::Spatial,
        specs,
        inputs,
        channels,
        size: grid.size,
    })
}

/// The 360 integer hues at S = 1, L = 0.5, ascending.
pub fn build_hue_bank(size: usize, channels: usize) -> Result<StimulusBank> {
    let mut specs = Vec::with_capacity(360);
    let mut inputs = Vec::with_capacity(360);
    for h in 0..360 {
        let spec = HueStimulusSpec::new(f64::from(h), size);
        inputs.push(encode_for_network(&generate_hue_field(&spec), channels)?);
        specs.push(StimulusSpec::Hue(spec));
    }
    Ok(StimulusBank {
        kind: BankKind::Hue,
        specs,
        inputs,
        channels,
        size,
    })
}
