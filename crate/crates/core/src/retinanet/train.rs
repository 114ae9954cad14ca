use super::data::Dataset;
use super::network::NetworkParameters;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{OptimizerState, RmsProp, Tape, Tensor};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f32,
    pub weight_decay: f32,
    pub batch_size: usize,
    /// Maximum random shift as a fraction of the image width/height.
    pub translate_fraction: f32,
    pub flip_probability: f32,
    pub smoothing: f32,
    pub epsilon: f32,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 20,
            learning_rate: 1e-4,
            weight_decay: 1e-6,
            batch_size: 128,
            translate_fraction: 0.10,
            flip_probability: 0.5,
            smoothing: 0.99,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || self.weight_decay < 0.0 {
            return Err(Error::InvalidArgument(
                "learning_rate must be positive and weight_decay non-negative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.translate_fraction) {
            return Err(Error::InvalidArgument("translate_fraction must lie in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return Err(Error::InvalidArgument("flip_probability must lie in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.smoothing) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("invalid RMSProp smoothing/epsilon".into()));
        }
        Ok(())
    }

    pub fn optimizer(&self) -> RmsProp {
        RmsProp {
            learning_rate: self.learning_rate,
            smoothing: self.smoothing,
            epsilon: self.epsilon,
            weight_decay: self.weight_decay,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub test_accuracy: f64,
}

/// Per-presentation randomisation applied to a training image before
/// augmentation (e.g. channel or tile shuffling).
pub trait SampleTransform: Send + Sync {
    fn apply(&self, image: &Tensor, rng: &mut Rng) -> Tensor;
}

pub fn train(
    params: &mut NetworkParameters,
    train_set: &Dataset,
    test_set: &Dataset,
    config: &TrainingConfig,
    rng: &mut Rng,
) -> Result<Vec<EpochRecord>> {
    train_with(params, train_set, test_set, config, rng, None)
}

/// Train with RMSProp, evaluating on the unaugmented test set after each
/// epoch.
pub fn train_with(
    params: &mut NetworkParameters,
    train_set: &Dataset,
    test_set: &Dataset,
    config: &TrainingConfig,
    rng: &mut Rng,
    transform: Option<&dyn SampleTransform>,
) -> Result<Vec<EpochRecord>> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Dataset("training set is empty".into()));
    }
    check_compatible(params, train_set)?;
    if !test_set.is_empty() {
        check_compatible(params, test_set)?;
    }
    let optimizer = config.optimizer();
    let mut state = OptimizerState::for_params(&params.tensors());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let mut loss_sum = 0.0f64;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let (batch, labels) = augmented_batch(train_set, chunk, config, rng, transform)?;
            let mut tape = Tape::new();
            let bound = params.bind(&mut tape, true);
            let input = tape.leaf(batch);
            let acts = bound.forward(&mut tape, input, None)?;
            let loss = tape.softmax_cross_entropy(acts.logits.expect("full forward"), &labels)?;
            let value = tape.value(loss).data()[0];
            if !value.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss became {value} in epoch {} batch {batches}",
                    epoch + 1
                )));
            }
            let mut grads = tape.backward(loss)?;
            let mut vars = Vec::new();
            for &(w, b) in &bound.conv {
                vars.extend([w, b]);
            }
            let ((hw, hb), (ow, ob)) = bound.classifier.expect("bound with classifier");
            vars.extend([hw, hb, ow, ob]);
            let grad_tensors: Vec<Tensor> = vars
                .into_iter()
                .map(|v| grads.take(v).expect("every parameter receives a gradient"))
                .collect();
            let grad_refs: Vec<&Tensor> = grad_tensors.iter().collect();
            optimizer.step(&mut params.tensors_mut(), &grad_refs, &mut state)?;
            loss_sum += f64::from(value);
            batches += 1;
        }
        let test_accuracy = if test_set.is_empty() {
            f64::NAN
        } else {
            evaluate(params, test_set)?
        };
        let record = EpochRecord {
            epoch: epoch + 1,
            mean_loss: loss_sum / batches as f64,
            test_accuracy,
        };
        log::info!(
            "epoch {}/{}: loss {:.4}, test accuracy {:.4}",
            record.epoch,
            config.epochs,
            record.mean_loss,
            record.test_accuracy
        );
        history.push(record);
    }
    Ok(history)
}

fn check_compatible(params: &NetworkParameters, data: &Dataset) -> Result<()> {
    let cfg = &params.config;
    if data.channels() != cfg.input_channels || data.size() != cfg.input_size {
        return Err(Error::Shape(format!(
            "dataset images are [{}, {}, {}] but the network expects [{}, {}, {}]",
            data.channels(),
            data.size(),
            data.size(),
            cfg.input_channels,
            cfg.input_size,
            cfg.input_size
        )));
    }
    if let Some(&bad) = data.labels().iter().find(|&&l| l as usize >= cfg.num_classes) {
        return Err(Error::Dataset(format!("label {bad} out of range")));
    }
    Ok(())
}

fn augmented_batch(
    data: &Dataset,
    indices: &[usize],
    config: &TrainingConfig,
    rng: &mut Rng,
    transform: Option<&dyn SampleTransform>,
) -> Result<(Tensor, Vec<usize>)> {
    let (c, s) = (data.channels(), data.size());
    let max_shift = (config.translate_fraction * s as f32).floor() as i64;
    let mut out = Vec::with_capacity(indices.len() * data.image_len());
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        let mut image = data.image_tensor(i);
        if let Some(t) = transform {
            image = t.apply(&image, rng);
        }
        let dy = rng.random_range(-max_shift..=max_shift) as isize;
        let dx = rng.random_range(-max_shift..=max_shift) as isize;
        let flip = config.flip_probability > 0.0 && rng.random::<f32>() < config.flip_probability;
        out.extend(translate_flip(image.data(), c, s, dy, dx, flip));
        labels.push(data.label(i) as usize);
    }
    Ok((Tensor::new(vec![indices.len(), c, s, s], out)?, labels))
}

/// Shift by `(dy, dx)` with black fill, then optionally mirror horizontally.
pub(crate) fn translate_flip(
    image: &[f32],
    channels: usize,
    size: usize,
    dy: isize,
    dx: isize,
    flip: bool,
) -> Vec<f32> {
    let s = size as isize;
    let mut out = vec![0.0f32; image.len()];
    for c in 0..channels {
        let plane = &image[c * size * size..(c + 1) * size * size];
        let dst = &mut out[c * size * size..(c + 1) * size * size];
        for y in 0..s {
            let sy = y - dy;
            if !(0..s).contains(&sy) {
                continue;
            }
            for x in 0..s {
                let sx = x - dx;
                if !(0..s).contains(&sx) {
                    continue;
                }
                let tx = if flip { s - 1 - x } else { x };
                dst[(y * s + tx) as usize] = plane[(sy * s + sx) as usize];
            }
        }
    }
    out
}

/// Fraction of correctly classified images; argmax ties go to the lowest
/// class index.
pub fn evaluate(params: &NetworkParameters, test_set: &Dataset) -> Result<f64> {
    if test_set.is_empty() {
        return Err(Error::Dataset("evaluation set is empty".into()));
    }
    check_compatible(params, test_set)?;
    let k = params.config.num_classes;
    let mut correct = 0usize;
    let indices: Vec<usize> = (0..test_set.len()).collect();
    for chunk in indices.chunks(100) {
        let (batch, labels) = test_set.batch(chunk);
        let out = super::network::forward(params, &batch, &[])?;
        for (row, &label) in out.logits.data().chunks_exact(k).zip(&labels) {
            if argmax(row) == label {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / test_set.len() as f64)
}

pub(crate) fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_on_ties() {
        assert_eq!(argmax(&[0.0, 1.0, 1.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
    }

    #[test]
    fn translation_fills_black_and_flip_mirrors() {
        let img: Vec<f32> = (0..9).map(|v| v as f32 + 1.0).collect();
        let shifted = translate_flip(&img, 1, 3, 1, 0, false);
        assert_eq!(shifted, vec![0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let flipped = translate_flip(&img, 1, 3, 0, 0, true);
        assert_eq!(flipped, vec![3.0, 2.0, 1.0, 6.0, 5.0, 4.0, 9.0, 8.0, 7.0]);
        let right = translate_flip(&img, 1, 3, 0, 1, false);
        assert_eq!(right, vec![0.0, 1.0, 2.0, 0.0, 4.0, 5.0, 0.0, 7.0, 8.0]);
    }

    #[test]
    fn config_validation() {
        assert!(TrainingConfig::default().validate().is_ok());
        let bad = TrainingConfig {
            translate_fraction: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainingConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
