use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Shape of one Retina-Net: bottleneck width, ventral depth and the
/// inherited layer dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArchitectureConfig {
    /// Output channels of the second retinal convolution.
    pub bottleneck_width: usize,
    /// Number of ventral convolutions after the retina.
    pub ventral_depth: usize,
    pub input_channels: usize,
    pub base_channels: usize,
    pub kernel_size: usize,
    pub hidden_units: usize,
    pub num_classes: usize,
    pub input_size: usize,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        ArchitectureConfig {
            bottleneck_width: 32,
            ventral_depth: 2,
            input_channels: 3,
            base_channels: 32,
            kernel_size: 9,
            hidden_units: 1024,
            num_classes: 10,
            input_size: 32,
        }
    }
}

impl ArchitectureConfig {
    pub fn new(bottleneck_width: usize, ventral_depth: usize) -> Self {
        ArchitectureConfig {
            bottleneck_width,
            ventral_depth,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bottleneck_width", self.bottleneck_width),
            ("base_channels", self.base_channels),
            ("kernel_size", self.kernel_size),
            ("hidden_units", self.hidden_units),
            ("num_classes", self.num_classes),
            ("input_size", self.input_size),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.kernel_size % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "kernel_size must be odd, got {}",
                self.kernel_size
            )));
        }
        if !matches!(self.input_channels, 1 | 3) {
            return Err(Error::InvalidArgument(format!(
                "input_channels must be 1 or 3, got {}",
                self.input_channels
            )));
        }
        Ok(())
    }

    pub fn conv_layer_count(&self) -> usize {
        2 + self.ventral_depth
    }

    pub fn conv_layer_names(&self) -> Vec<LayerName> {
        (0..self.conv_layer_count())
            .map(|i| LayerName::from_conv_index(i).expect("index in range"))
            .collect()
    }

    /// `(C_out, C_in)` of conv layer `index`.
    pub fn conv_channels(&self, index: usize) -> Option<(usize, usize)> {
        match index {
            0 => Some((self.base_channels, self.input_channels)),
            1 => Some((self.bottleneck_width, self.base_channels)),
            i if i < self.conv_layer_count() => {
                let c_in = if i == 2 {
                    self.bottleneck_width
                } else {
                    self.base_channels
                };
                Some((self.base_channels, c_in))
            }
            _ => None,
        }
    }

    pub fn layer_channels(&self, layer: LayerName) -> Option<usize> {
        self.conv_channels(layer.conv_index()).map(|(c, _)| c)
    }

    pub fn has_layer(&self, layer: LayerName) -> bool {
        layer.conv_index() < self.conv_layer_count()
    }

    pub fn flat_features(&self) -> usize {
        let (c_last, _) = self
            .conv_channels(self.conv_layer_count() - 1)
            .expect("at least two conv layers");
        c_last * self.input_size * self.input_size
    }
}

/// Name of a convolutional layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LayerName {
    Retina1,
    Retina2,
    /// Ventral layer, numbered from 1.
    Ventral(usize),
}

impl LayerName {
    pub fn conv_index(self) -> usize {
        match self {
            LayerName::Retina1 => 0,
            LayerName::Retina2 => 1,
            LayerName::Ventral(i) => 1 + i,
        }
    }

    pub fn from_conv_index(index: usize) -> Option<Self> {
        Some(match index {
            0 => LayerName::Retina1,
            1 => LayerName::Retina2,
            i => LayerName::Ventral(i - 1),
        })
    }
}

impl fmt::Display for LayerName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerName::Retina1 => write!(f, "Retina1"),
            LayerName::Retina2 => write!(f, "Retina2"),
            LayerName::Ventral(i) => write!(f, "Ventral{i}"),
        }
    }
}

impl FromStr for LayerName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| !matches!(c, ' ' | '_' | '-'))
            .collect::<String>()
            .to_ascii_lowercase();
        let bad = || Error::InvalidArgument(format!("unknown layer name {s:?}"));
        if let Some(rest) = norm.strip_prefix("retina") {
            return match rest {
                "1" => Ok(LayerName::Retina1),
                "2" => Ok(LayerName::Retina2),
                _ => Err(bad()),
            };
        }
        if let Some(rest) = norm.strip_prefix("ventral") {
            let i: usize = rest.parse().map_err(|_| bad())?;
            if i == 0 {
                return Err(bad());
            }
            return Ok(LayerName::Ventral(i));
        }
        Err(bad())
    }
}

impl Serialize for LayerName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LayerName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
