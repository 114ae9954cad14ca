use super::classify::{
    classify, classify_double, hue_bin, most_excitatory_hue, most_inhibitory_hue,
    preferred_stimulus, HueBin, HuePick, OpponencyClass,
};
use super::probe::{probe_cells, CellId, CellSampling, TuningCurve};
use crate::error::{Error, Result};
use crate::retinanet::{LayerName, NetworkParameters};
use crate::stimuli::{BankKind, GratingSpec, StimulusBank, StimulusSpec};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Everything the population analysis records about one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellProfile {
    pub cell: CellId,
    pub spatial: OpponencyClass,
    pub colour: OpponencyClass,
    pub double: bool,
    pub max_excite: HuePick,
    pub min_inhibit: HuePick,
    pub preferred_grating: GratingSpec,
}

pub fn profile_cell(cell: CellId, spatial: &TuningCurve, hue: &TuningCurve) -> Result<CellProfile> {
    if spatial.kind != BankKind::Spatial || hue.kind != BankKind::Hue {
        return Err(Error::InvalidArgument(
            "profile_cell needs a spatial curve and a hue curve".into(),
        ));
    }
    let pref = preferred_stimulus(spatial);
    let StimulusSpec::Grating(preferred_grating) = spatial.stimuli[pref] else {
        return Err(Error::InvalidArgument("spatial curve holds a non-grating stimulus".into()));
    };
    let spatial_class = classify(spatial);
    let colour_class = classify(hue);
    Ok(CellProfile {
        cell,
        spatial: spatial_class,
        colour: colour_class,
        double: classify_double(spatial_class, colour_class),
        max_excite: most_excitatory_hue(hue).expect("hue curve"),
        min_inhibit: most_inhibitory_hue(hue).expect("hue curve"),
        preferred_grating,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassFractions {
    pub opponent: f64,
    pub non_opponent: f64,
    pub unresponsive: f64,
}

impl ClassFractions {
    pub fn from_classes(classes: impl IntoIterator<Item = OpponencyClass>) -> Self {
        let mut counts = [0usize; 3];
        for c in classes {
            counts[c as usize] += 1;
        }
        let n = counts.iter().sum::<usize>();
        if n == 0 {
            return ClassFractions::default();
        }
        let n = n as f64;
        ClassFractions {
            opponent: counts[0] as f64 / n,
            non_opponent: counts[1] as f64 / n,
            unresponsive: counts[2] as f64 / n,
        }
    }

    pub fn get(&self, class: OpponencyClass) -> f64 {
        match class {
            OpponencyClass::Opponent => self.opponent,
            OpponencyClass::NonOpponent => self.non_opponent,
            OpponencyClass::Unresponsive => self.unresponsive,
        }
    }
}

/// Class fractions and hue distributions for one layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer: LayerName,
    pub cells: usize,
    pub spatial: ClassFractions,
    pub colour: ClassFractions,
    pub double_opponent: f64,
    /// Count of cells per integer most-excitatory hue.
    pub excitatory_hues: Vec<u32>,
    /// Count of cells per integer most-inhibitory hue.
    pub inhibitory_hues: Vec<u32>,
    /// Excitatory-hue histogram of the cells whose most-inhibitory hue falls
    /// in each bin, indexed by [`HueBin::index`].
    pub conditional: Vec<Vec<u32>>,
}

fn hue_index(h: f64) -> usize {
    (h.rem_euclid(360.0).floor() as usize).min(359)
}

impl LayerReport {
    pub fn from_profiles(layer: LayerName, profiles: &[&CellProfile]) -> Self {
        let mut excitatory_hues = vec![0u32; 360];
        let mut inhibitory_hues = vec![0u32; 360];
        let mut conditional = vec![vec![0u32; 360]; HueBin::ALL.len()];
        for p in profiles {
            if !p.max_excite.degenerate {
                excitatory_hues[hue_index(p.max_excite.hue)] += 1;
            }
            if !p.min_inhibit.degenerate {
                inhibitory_hues[hue_index(p.min_inhibit.hue)] += 1;
            }
            if !p.max_excite.degenerate && !p.min_inhibit.degenerate {
                conditional[hue_bin(p.min_inhibit.hue).index()][hue_index(p.max_excite.hue)] += 1;
            }
        }
        let n = profiles.len();
        LayerReport {
            layer,
            cells: n,
            spatial: ClassFractions::from_classes(profiles.iter().map(|p| p.spatial)),
            colour: ClassFractions::from_classes(profiles.iter().map(|p| p.colour)),
            double_opponent: if n == 0 {
                0.0
            } else {
                profiles.iter().filter(|p| p.double).count() as f64 / n as f64
            },
            excitatory_hues,
            inhibitory_hues,
            conditional,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationReport {
    pub sampling: CellSampling,
    pub layers: Vec<LayerReport>,
    pub cells: Vec<CellProfile>,
}

/// Probe and classify every sampled cell of `layers`.
pub fn population_report(
    params: &NetworkParameters,
    layers: &[LayerName],
    spatial_bank: &StimulusBank,
    hue_bank: &StimulusBank,
    sampling: &CellSampling,
) -> Result<PopulationReport> {
    if spatial_bank.kind != BankKind::Spatial || hue_bank.kind != BankKind::Hue {
        return Err(Error::InvalidArgument("banks passed in the wrong order".into()));
    }
    let mut cells = Vec::new();
    for &layer in layers {
        cells.extend(sampling.cells(&params.config, layer)?);
    }
    let spatial = probe_cells(params, &cells, spatial_bank)?;
    let hue = probe_cells(params, &cells, hue_bank)?;
    let profiles = cells
        .iter()
        .zip(spatial.iter().zip(&hue))
        .map(|(&cell, (s, h))| profile_cell(cell, s, h))
        .collect::<Result<Vec<_>>>()?;
    Ok(PopulationReport::from_profiles(sampling.clone(), layers, profiles))
}

impl PopulationReport {
    pub fn from_profiles(sampling: CellSampling, layers: &[LayerName], cells: Vec<CellProfile>) -> Self {
        let layers = layers
            .iter()
            .map(|&layer| {
                let in_layer: Vec<&CellProfile> = cells.iter().filter(|p| p.cell.layer == layer).collect();
                LayerReport::from_profiles(layer, &in_layer)
            })
            .collect();
        PopulationReport {
            sampling,
            layers,
            cells,
        }
    }

    pub fn layer(&self, layer: LayerName) -> Option<&LayerReport> {
        self.layers.iter().find(|l| l.layer == layer)
    }

    pub fn cell_table(&self) -> String {
        let mut out = String::from(
            "layer,channel,row,col,spatial_class,colour_class,double,max_excite_hue,min_inhibit_hue,pref_theta,pref_freq,pref_phase\n",
        );
        for p in &self.cells {
            let g = &p.preferred_grating;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                p.cell.layer,
                p.cell.channel,
                p.cell.row,
                p.cell.col,
                p.spatial,
                p.colour,
                p.double,
                p.max_excite.hue,
                p.min_inhibit.hue,
                g.theta,
                g.frequency,
                g.phase
            )
            .expect("write to string");
        }
        out
    }

    pub fn layer_summary_table(&self) -> String {
        let mut out = String::from(
            "layer,cells,spatial_opponent,spatial_non_opponent,spatial_unresponsive,colour_opponent,colour_non_opponent,colour_unresponsive,double_opponent\n",
        );
        for l in &self.layers {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                l.layer,
                l.cells,
                l.spatial.opponent,
                l.spatial.non_opponent,
                l.spatial.unresponsive,
                l.colour.opponent,
                l.colour.non_opponent,
                l.colour.unresponsive,
                l.double_opponent
            )
            .expect("write to string");
        }
        out
    }

    pub fn conditional_table(&self) -> String {
        let mut out = String::from("layer,inhibitory_bin,excitatory_hue,count\n");
        for l in &self.layers {
            for bin in HueBin::ALL {
                for (hue, &count) in l.conditional[bin.index()].iter().enumerate() {
                    writeln!(out, "{},{},{},{}", l.layer, bin.as_str(), hue, count)
                        .expect("write to string");
                }
            }
        }
        out
    }

    /// Write `cells.csv`, `layers.csv`, `conditional.csv` and `report.json`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("cells.csv"), self.cell_table())?;
        fs::write(dir.join("layers.csv"), self.layer_summary_table())?;
        fs::write(dir.join("conditional.csv"), self.conditional_table())?;
        fs::write(dir.join("report.json"), serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}


#[cfg(test)]
mod population_tests {
    use super::*;
    use crate::stimuli::{build_hue_bank, build_spatial_bank, SpatialGrid};
    use crate::testutil::toy_network;

    #[test]
    fn toy_population() {
        let net = toy_network([1.0, -1.0, 0.0], 0.5, 2);
        let grid = SpatialGrid {
            size: 2,
            frequencies: vec![1.0],
            ..Default::default()
        };
        let spatial = build_spatial_bank(&grid, 3).unwrap();
        let hue = build_hue_bank(2, 3).unwrap();
        let report = population_report(
            &net,
            &[LayerName::Retina1, LayerName::Retina2],
            &spatial,
            &hue,
            &CellSampling::All,
        )
        .unwrap();
        assert_eq!(report.cells.len(), 8);
        let r1 = report.layer(LayerName::Retina1).unwrap();
        assert_eq!(r1.cells, 4);
        assert_eq!(r1.colour.opponent, 1.0);
        assert_eq!(r1.spatial.unresponsive, 1.0);
        assert_eq!(r1.excitatory_hues[0], 4);
        let dir = tempfile::tempdir().unwrap();
        report.write_to(dir.path()).unwrap();
        assert!(dir.path().join("report.json").exists());
        assert!(population_report(&net, &[LayerName::Ventral(1)], &spatial, &hue, &CellSampling::Centre).is_err());
        assert!(population_report(&net, &[LayerName::Retina1], &hue, &spatial, &CellSampling::Centre).is_err());
    }
}
