use super::condition::InputCondition;
use crate::electrophys::CellSampling;
use crate::error::{Error, Result};
use crate::retinanet::{ArchitectureConfig, LayerName, TrainingConfig};
use crate::stimuli::SpatialGrid;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

pub const DATASET_ENV: &str = "OPPNET_CIFAR10_DIR";

/// Layer dimensions shared by every run of a sweep; `None` keeps the default.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchitectureOverrides {
    pub base_channels: Option<usize>,
    pub kernel_size: Option<usize>,
    pub hidden_units: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub spatial_grid: SpatialGrid,
    pub sampling: CellSampling,
    /// Layers to classify; empty means every conv layer.
    pub layers: Vec<LayerName>,
    pub sensitivity_layer: LayerName,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            spatial_grid: SpatialGrid::default(),
            sampling: CellSampling::Centre,
            layers: Vec::new(),
            sensitivity_layer: LayerName::Retina2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label written into every run record and summary header.
    pub preset: String,
    pub dataset: Option<PathBuf>,
    pub bottleneck_widths: Vec<usize>,
    pub ventral_depths: Vec<usize>,
    pub repeats: usize,
    pub training: TrainingConfig,
    pub condition: InputCondition,
    pub architecture: ArchitectureOverrides,
    /// Use only the first `n` training images.
    pub train_subset: Option<usize>,
    pub test_subset: Option<usize>,
    pub probe: ProbeConfig,
    pub output: PathBuf,
    pub master_seed: u64,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::paper_scale()
    }
}

impl ExperimentConfig {
    /// The full published grid: 6 widths, 5 depths, 10 repeats, 20 epochs.
    pub fn paper_scale() -> Self {
        ExperimentConfig {
            preset: "paper-scale".into(),
            dataset: None,
            bottleneck_widths: vec![1, 2, 4, 8, 16, 32],
            ventral_depths: vec![0, 1, 2, 3, 4],
            repeats: 10,
            training: TrainingConfig::default(),
            condition: InputCondition::Rgb,
            architecture: ArchitectureOverrides::default(),
            train_subset: None,
            test_subset: None,
            probe: ProbeConfig::default(),
            output: PathBuf::from("runs"),
            master_seed: 0,
            workers: 1,
        }
    }

    /// Two widths, two depths, 2 repeats, 10 epochs on 10,000 images.
    pub fn desk_scale() -> Self {
        ExperimentConfig {
            preset: "desk-scale".into(),
            bottleneck_widths: vec![1, 32],
            ventral_depths: vec![0, 2],
            repeats: 2,
            training: TrainingConfig {
                epochs: 10,
                ..TrainingConfig::default()
            },
            train_subset: Some(10_000),
            ..ExperimentConfig::paper_scale()
        }
    }

    pub fn from_preset(name: &str) -> Result<Self> {
        match name {
            "paper-scale" | "paper" => Ok(Self::paper_scale()),
            "desk-scale" | "desk" => Ok(Self::desk_scale()),
            _ => Err(Error::InvalidArgument(format!("unknown preset '{name}'"))),
        }
    }

    /// Read a TOML file. A `preset` key selects the base the other keys override.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::InvalidArgument(format!("config: {e}")))?;
        let base = match value.get("preset").and_then(toml::Value::as_str) {
            Some(name) => Self::from_preset(name)?,
            None => Self::paper_scale(),
        };
        let mut merged = toml::Table::try_from(&base)
            .map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        merge(&mut merged, value);
        let cfg: ExperimentConfig = merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidArgument("repeats must be at least 1".into()));
        }
        if self.bottleneck_widths.is_empty() || self.ventral_depths.is_empty() {
            return Err(Error::InvalidArgument("sweep lists must be non-empty".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        self.training.validate()?;
        for &nbn in &self.bottleneck_widths {
            for &dvvs in &self.ventral_depths {
                self.architecture(nbn, dvvs, 32).validate()?;
            }
        }
        Ok(())
    }

    pub fn architecture(&self, nbn: usize, dvvs: usize, input_size: usize) -> ArchitectureConfig {
        let d = ArchitectureConfig::default();
        let o = &self.architecture;
        ArchitectureConfig {
            bottleneck_width: nbn,
            ventral_depth: dvvs,
            input_channels: self.condition.input_channels(),
            base_channels: o.base_channels.unwrap_or(d.base_channels),
            kernel_size: o.kernel_size.unwrap_or(d.kernel_size),
            hidden_units: o.hidden_units.unwrap_or(d.hidden_units),
            num_classes: d.num_classes,
            input_size,
        }
    }

    /// Dataset root from the config, else from the environment.
    pub fn dataset_dir(&self) -> Option<PathBuf> {
        self.dataset
            .clone()
            .or_else(|| std::env::var_os(DATASET_ENV).map(PathBuf::from))
    }

    pub fn run_count(&self) -> usize {
        self.bottleneck_widths.len() * self.ventral_depths.len() * self.repeats
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
