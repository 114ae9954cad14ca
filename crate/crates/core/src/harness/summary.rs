use super::condition::InputCondition;
use super::sweep::{RunRecord, RunStatus};
use crate::electrophys::{HueBin, OpponencyClass, PopulationReport};
use crate::error::{Error, Result};
use crate::retinanet::LayerName;
use crate::sensitivity::{sensitivity_aggregate, HueSensitivityCurve};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Named sets of bottleneck widths and ventral depths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grouping {
    pub widths: Vec<(String, Vec<usize>)>,
    pub depths: Vec<(String, Vec<usize>)>,
}

impl Default for Grouping {
    fn default() -> Self {
        Grouping {
            widths: vec![("Narrow".into(), vec![1, 2, 4]), ("Wide".into(), vec![8, 16, 32])],
            depths: vec![("Shallow".into(), vec![0, 1]), ("Deep".into(), vec![3, 4])],
        }
    }
}

impl Grouping {
    pub fn width_group(&self, nbn: usize) -> Option<&str> {
        self.widths.iter().find(|(_, v)| v.contains(&nbn)).map(|(n, _)| n.as_str())
    }

    pub fn depth_group(&self, dvvs: usize) -> Option<&str> {
        self.depths.iter().find(|(_, v)| v.contains(&dvvs)).map(|(n, _)| n.as_str())
    }

    /// e.g. `Narrow + Deep`; `None` when either value is ungrouped.
    pub fn label(&self, nbn: usize, dvvs: usize) -> Option<String> {
        Some(format!("{} + {}", self.width_group(nbn)?, self.depth_group(dvvs)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, std, n })
    }

    pub fn stderr(&self) -> f64 {
        self.std / (self.n as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionRow {
    pub condition: InputCondition,
    pub ventral_depth: usize,
    pub bottleneck_width: usize,
    pub layer: LayerName,
    /// `spatial`, `colour` or `double`.
    pub modality: String,
    pub class: String,
    pub stats: MeanStd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub condition: InputCondition,
    pub bottleneck_width: usize,
    pub ventral_depth: usize,
    pub stats: MeanStd,
}

/// Excitatory-hue counts of bottleneck cells, conditioned on their
/// most-inhibitory hue bin, pooled over a group of runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpponencyTypeTable {
    pub condition: InputCondition,
    pub group: String,
    pub layer: LayerName,
    pub counts: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSensitivity {
    pub condition: InputCondition,
    pub group: String,
    pub curve: HueSensitivityCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryTables {
    pub presets: Vec<String>,
    pub fractions: Vec<FractionRow>,
    pub accuracy: Vec<AccuracyRow>,
    pub opponency_types: Vec<OpponencyTypeTable>,
    pub sensitivity: Vec<GroupSensitivity>,
}

type Cell = (InputCondition, usize, usize);

/// Aggregate completed runs. Incomplete records are ignored; none complete
/// is an error.
pub fn emit_summary(records: &[RunRecord], grouping: &Grouping) -> Result<SummaryTables> {
    let done: Vec<&RunRecord> = records.iter().filter(|r| r.status == RunStatus::Complete).collect();
    if done.is_empty() {
        return Err(Error::InvalidArgument("no completed runs to summarise".into()));
    }
    let mut presets: Vec<String> = done.iter().map(|r| r.preset.clone()).collect();
    presets.sort();
    presets.dedup();

    let mut accuracies: BTreeMap<Cell, Vec<f64>> = BTreeMap::new();
    let mut fractions: BTreeMap<(Cell, LayerName, &'static str, &'static str), Vec<f64>> = BTreeMap::new();
    let mut types: BTreeMap<(InputCondition, String), Vec<Vec<u32>>> = BTreeMap::new();
    let mut curves: BTreeMap<(InputCondition, String), Vec<HueSensitivityCurve>> = BTreeMap::new();

    for r in &done {
        let k = &r.key;
        let cell = (k.condition, k.ventral_depth, k.bottleneck_width);
        if let Some(acc) = r.test_accuracy {
            accuracies.entry(cell).or_default().push(acc);
        }
        let group = grouping.label(k.bottleneck_width, k.ventral_depth);
        if let Some(path) = &r.report {
            let report: PopulationReport = serde_json::from_slice(&fs::read(path)?)?;
            for l in &report.layers {
                for class in OpponencyClass::ALL {
                    fractions
                        .entry((cell, l.layer, "spatial", class.as_str()))
                        .or_default()
                        .push(l.spatial.get(class));
                    fractions
                        .entry((cell, l.layer, "colour", class.as_str()))
                        .or_default()
                        .push(l.colour.get(class));
                }
                fractions
                    .entry((cell, l.layer, "double", "opponent"))
                    .or_default()
                    .push(l.double_opponent);
                if let (LayerName::Retina2, Some(g)) = (l.layer, &group) {
                    let acc = types
                        .entry((k.condition, g.clone()))
                        .or_insert_with(|| vec![vec![0; 360]; HueBin::ALL.len()]);
                    for (row, add) in acc.iter_mut().zip(&l.conditional) {
                        for (a, b) in row.iter_mut().zip(add) {
                            *a += b;
                        }
                    }
                }
            }
        }
        if let (Some(path), Some(g)) = (&r.sensitivity, &group) {
            let curve: HueSensitivityCurve = serde_json::from_slice(&fs::read(path)?)?;
            curves.entry((k.condition, g.clone())).or_default().push(curve);
        }
    }

    let accuracy = accuracies
        .into_iter()
        .map(|((condition, dvvs, nbn), v)| AccuracyRow {
            condition,
            bottleneck_width: nbn,
            ventral_depth: dvvs,
            stats: MeanStd::of(&v).expect("non-empty"),
        })
        .collect();
    let fractions = fractions
        .into_iter()
        .map(|(((condition, dvvs, nbn), layer, modality, class), v)| FractionRow {
            condition,
            ventral_depth: dvvs,
            bottleneck_width: nbn,
            layer,
            modality: modality.into(),
            class: class.into(),
            stats: MeanStd::of(&v).expect("non-empty"),
        })
        .collect();
    let opponency_types = types
        .into_iter()
        .map(|((condition, group), counts)| OpponencyTypeTable {
            condition,
            group,
            layer: LayerName::Retina2,
            counts,
        })
        .collect();
    let sensitivity = curves
        .into_iter()
        .map(|((condition, group), cs)| {
            Ok(GroupSensitivity {
                condition,
                group,
                curve: sensitivity_aggregate(&cs)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SummaryTables {
        presets,
        fractions,
        accuracy,
        opponency_types,
        sensitivity,
    })
}

impl SummaryTables {
    fn header(&self) -> String {
        format!("# preset: {}\n", self.presets.join(", "))
    }

    pub fn accuracy_csv(&self) -> String {
        let mut out = self.header();
        out.push_str("condition,bottleneck_width,ventral_depth,mean,std,stderr,n\n");
        for r in &self.accuracy {
            let s = &r.stats;
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.condition,
                r.bottleneck_width,
                r.ventral_depth,
                s.mean,
                s.std,
                s.stderr(),
                s.n
            )
            .expect("write to string");
        }
        out
    }

    pub fn fractions_csv(&self) -> String {
        let mut out = self.header();
        out.push_str("condition,ventral_depth,bottleneck_width,layer,modality,class,mean,std,n\n");
        for r in &self.fractions {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.condition,
                r.ventral_depth,
                r.bottleneck_width,
                r.layer,
                r.modality,
                r.class,
                r.stats.mean,
                r.stats.std,
                r.stats.n
            )
            .expect("write to string");
        }
        out
    }

    pub fn opponency_types_csv(&self) -> String {
        let mut out = self.header();
        out.push_str("condition,group,layer,inhibitory_bin,excitatory_hue,count\n");
        for t in &self.opponency_types {
            for bin in HueBin::ALL {
                for (hue, count) in t.counts[bin.index()].iter().enumerate() {
                    writeln!(out, "{},{},{},{},{},{}", t.condition, t.group, t.layer, bin.as_str(), hue, count)
                        .expect("write to string");
                }
            }
        }
        out
    }

    pub fn sensitivity_csv(&self) -> String {
        let mut out = self.header();
        out.push_str("condition,group,models,hue,mean,stderr,undefined\n");
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for g in &self.sensitivity {
            let c = &g.curve;
            for i in 0..c.hues.len() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    g.condition,
                    g.group,
                    c.models,
                    c.hues[i],
                    fmt(c.mean[i]),
                    fmt(c.stderr[i]),
                    c.undefined[i]
                )
                .expect("write to string");
            }
        }
        out
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("accuracy.csv"), self.accuracy_csv())?;
        fs::write(dir.join("fractions.csv"), self.fractions_csv())?;
        fs::write(dir.join("opponency_types.csv"), self.opponency_types_csv())?;
        fs::write(dir.join("sensitivity.csv"), self.sensitivity_csv())?;
        fs::write(dir.join("summary.json"), serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sweep::RunKey;
    use std::path::PathBuf;

    fn record(nbn: usize, dvvs: usize, repeat: usize, acc: f64) -> RunRecord {
        RunRecord {
            key: RunKey {
                bottleneck_width: nbn,
                ventral_depth: dvvs,
                repeat,
                condition: InputCondition::Rgb,
            },
            preset: "desk-scale".into(),
            seed: 0,
            status: RunStatus::Complete,
            dir: PathBuf::new(),
            checkpoint: None,
            history: Vec::new(),
            test_accuracy: Some(acc),
            report: None,
            sensitivity: None,
            error: None,
        }
    }

    #[test]
    fn grouping_matches_published_sets() {
        let g = Grouping::default();
        let narrow: Vec<usize> = (0..=64).filter(|&n| g.width_group(n) == Some("Narrow")).collect();
        assert_eq!(narrow, vec![1, 2, 4]);
        let wide: Vec<usize> = (0..=64).filter(|&n| g.width_group(n) == Some("Wide")).collect();
        assert_eq!(wide, vec![8, 16, 32]);
        assert_eq!(g.depth_group(2), None);
        assert_eq!(g.label(2, 4).as_deref(), Some("Narrow + Deep"));
    }

    #[test]
    fn mean_and_sample_std() {
        let s = MeanStd::of(&[0.4, 0.6]).unwrap();
        assert!((s.mean - 0.5).abs() < 1e-12);
        assert!((s.std - 0.141_421_356).abs() < 1e-8);
        assert_eq!(MeanStd::of(&[0.3]).unwrap().std, 0.0);
        assert!(MeanStd::of(&[]).is_none());
    }

    #[test]
    fn accuracy_rows_per_grid_cell() {
        let recs = vec![
            record(1, 0, 0, 0.4),
            record(1, 0, 1, 0.6),
            record(32, 0, 0, 0.5),
            record(32, 0, 1, 0.7),
        ];
        let s = emit_summary(&recs, &Grouping::default()).unwrap();
        assert_eq!(s.accuracy.len(), 2);
        assert!((s.accuracy[0].stats.mean - 0.5).abs() < 1e-12);
        assert_eq!(s.accuracy[0].stats.n, 2);
        assert!(s.accuracy_csv().starts_with("# preset: desk-scale\ncondition,"));
    }

    #[test]
    fn empty_or_failed_records_rejected() {
        assert!(emit_summary(&[], &Grouping::default()).is_err());
        let mut r = record(1, 0, 0, 0.5);
        r.status = RunStatus::Failed;
        assert!(emit_summary(&[r], &Grouping::default()).is_err());
    }
}
