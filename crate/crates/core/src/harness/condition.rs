use crate::error::{Error, Result};
use crate::retinanet::{Dataset, SampleTransform};
use crate::rng::{derive_seed, seeded, Rng};
use crate::stimuli::{channel_shuffle, hue_rotate, mosaic_shuffle, rgb_to_cielab, rgb_to_grey};
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_MOSAIC_TILE: usize = 8;

/// How training images are presented to the network.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InputCondition {
    #[default]
    Rgb,
    Greyscale,
    HueRotated90,
    Cielab,
    Mosaic { tile: usize },
    ChannelShuffled,
}

impl InputCondition {
    pub fn input_channels(self) -> usize {
        match self {
            InputCondition::Greyscale => 1,
            _ => 3,
        }
    }

    /// True for conditions redrawn on every presentation.
    pub fn is_random(self) -> bool {
        matches!(self, InputCondition::Mosaic { .. } | InputCondition::ChannelShuffled)
    }

    /// Deterministic image transform; identity for the random conditions.
    pub fn apply_static(self, image: &Tensor) -> Result<Tensor> {
        match self {
            InputCondition::Greyscale => rgb_to_grey(image),
            InputCondition::HueRotated90 => hue_rotate(image, 90.0),
            InputCondition::Cielab => rgb_to_cielab(image),
            _ => Ok(image.clone()),
        }
    }

    pub fn apply_random(self, image: &Tensor, rng: &mut Rng) -> Result<Tensor> {
        match self {
            InputCondition::Mosaic { tile } => mosaic_shuffle(image, tile, rng),
            InputCondition::ChannelShuffled => Ok(channel_shuffle(image, rng)?.0),
            _ => Ok(image.clone()),
        }
    }

    /// Training and test sets as the network sees them. The training set gets
    /// only the static part; random conditions are redrawn by
    /// [`InputCondition::sample_transform`]. The test set is randomised once
    /// with a generator derived from `seed`.
    pub fn prepare(self, train: &Dataset, test: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
        if train.channels() != 3 || test.channels() != 3 {
            return Err(Error::Dataset("conditions are defined on RGB datasets".into()));
        }
        if let InputCondition::Mosaic { tile } = self {
            if tile == 0 || train.size() % tile != 0 {
                return Err(Error::InvalidArgument(format!(
                    "mosaic tile {tile} does not divide image size {}",
                    train.size()
                )));
            }
        }
        let train = train.map_images(|_, img| self.apply_static(img))?;
        let mut rng = seeded(derive_seed(seed, &[u64::from(u32::MAX)]));
        let test = test.map_images(|_, img| self.apply_random(&self.apply_static(img)?, &mut rng))?;
        Ok((train, test))
    }

    pub fn sample_transform(self) -> Option<ConditionTransform> {
        self.is_random().then_some(ConditionTransform(self))
    }
}

/// Per-presentation transform for a random condition.
#[derive(Clone, Copy, Debug)]
pub struct ConditionTransform(InputCondition);

impl SampleTransform for ConditionTransform {
    fn apply(&self, image: &Tensor, rng: &mut Rng) -> Tensor {
        self.0
            .apply_random(image, rng)
            .expect("condition validated against the dataset before training")
    }
}

impl fmt::Display for InputCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputCondition::Rgb => f.write_str("rgb"),
            InputCondition::Greyscale => f.write_str("greyscale"),
            InputCondition::HueRotated90 => f.write_str("hue_rotated_90"),
            InputCondition::Cielab => f.write_str("cielab"),
            InputCondition::Mosaic { tile } => write!(f, "mosaic({tile})"),
            InputCondition::ChannelShuffled => f.write_str("channel_shuffled"),
        }
    }
}

impl FromStr for InputCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace('-', "_");
        let cond = match t.as_str() {
            "rgb" | "colour" | "color" => InputCondition::Rgb,
            "greyscale" | "grayscale" | "grey" | "gray" => InputCondition::Greyscale,
            "hue_rotated_90" | "hue_rotated" => InputCondition::HueRotated90,
            "cielab" | "lab" => InputCondition::Cielab,
            "mosaic" => InputCondition::Mosaic {
                tile: DEFAULT_MOSAIC_TILE,
            },
            "channel_shuffled" | "shuffled" => InputCondition::ChannelShuffled,
            _ => {
                let tile = t
                    .strip_prefix("mosaic(")
                    .and_then(|r| r.strip_suffix(')'))
                    .or_else(|| t.strip_prefix("mosaic:"))
                    .and_then(|n| n.trim().parse().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown input condition '{s}'")))?;
                InputCondition::Mosaic { tile }
            }
        };
        Ok(cond)
    }
}

impl TryFrom<String> for InputCondition {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<InputCondition> for String {
    fn from(c: InputCondition) -> String {
        c.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_rgb(n: usize) -> Dataset {
        let images: Vec<Tensor> = (0..n)
            .map(|k| Tensor::from_fn(&[3, 4, 4], |i| ((i + k) % 7) as f32 / 7.0))
            .collect();
        Dataset::from_images(&images, vec![0; n]).unwrap()
    }

    #[test]
    fn parse_and_display_round_trip() {
        for c in [
            InputCondition::Rgb,
            InputCondition::Greyscale,
            InputCondition::HueRotated90,
            InputCondition::Cielab,
            InputCondition::Mosaic { tile: 4 },
            InputCondition::ChannelShuffled,
        ] {
            assert_eq!(c.to_string().parse::<InputCondition>().unwrap(), c);
        }
        assert_eq!("mosaic:16".parse::<InputCondition>().unwrap(), InputCondition::Mosaic { tile: 16 });
        assert!("sepia".parse::<InputCondition>().is_err());
        let json = serde_json::to_string(&InputCondition::Mosaic { tile: 2 }).unwrap();
        assert_eq!(json, "\"mosaic(2)\"");
    }

    #[test]
    fn greyscale_has_one_channel() {
        let data = tiny_rgb(3);
        let (train, test) = InputCondition::Greyscale.prepare(&data, &data, 0).unwrap();
        assert_eq!((train.channels(), test.channels()), (1, 1));
        assert_eq!(InputCondition::Greyscale.input_channels(), 1);
    }

    #[test]
    fn random_conditions_keep_training_data_and_fix_the_test_set() {
        let data = tiny_rgb(4);
        let cond = InputCondition::ChannelShuffled;
        let (train, test_a) = cond.prepare(&data, &data, 5).unwrap();
        let (_, test_b) = cond.prepare(&data, &data, 5).unwrap();
        assert_eq!(train.image(1), data.image(1));
        assert_eq!(test_a.image(2), test_b.image(2));
        assert!(cond.sample_transform().is_some());
        assert!(InputCondition::Cielab.sample_transform().is_none());
    }

    #[test]
    fn bad_mosaic_tile_rejected() {
        let data = tiny_rgb(1);
        assert!(InputCondition::Mosaic { tile: 3 }.prepare(&data, &data, 0).is_err());
    }
}
