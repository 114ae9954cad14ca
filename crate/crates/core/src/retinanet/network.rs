use super::config::{ArchitectureConfig, LayerName};
use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};
use crate::tensor::{xavier_uniform, Element, Tape, TapeOf, Tensor, TensorOf, Var};
use std::collections::BTreeMap;

/// Weights and bias of one convolution or fully-connected layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamLayer {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl ParamLayer {
    fn xavier(weight_shape: &[usize], bias_len: usize, rng: &mut Rng) -> Result<Self> {
        Ok(ParamLayer {
            weight: xavier_uniform(weight_shape, rng)?,
            bias: Tensor::zeros(&[bias_len]),
        })
    }
}

/// Learned parameters of a Retina-Net, in layer order.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParameters {
    pub config: ArchitectureConfig,
    /// Retina1, Retina2, then the ventral convolutions.
    pub conv: Vec<ParamLayer>,
    pub hidden: ParamLayer,
    pub output: ParamLayer,
}

/// Xavier-initialised network with zero biases.
pub fn build_network(config: &ArchitectureConfig, seed: u64) -> Result<NetworkParameters> {
    config.validate()?;
    let mut rng = seeded(seed);
    let k = config.kernel_size;
    let mut conv = Vec::with_capacity(config.conv_layer_count());
    for i in 0..config.conv_layer_count() {
        let (c_out, c_in) = config.conv_channels(i).expect("index in range");
        conv.push(ParamLayer::xavier(&[c_out, c_in, k, k], c_out, &mut rng)?);
    }
    let hidden = ParamLayer::xavier(
        &[config.flat_features(), config.hidden_units],
        config.hidden_units,
        &mut rng,
    )?;
    let output = ParamLayer::xavier(
        &[config.hidden_units, config.num_classes],
        config.num_classes,
        &mut rng,
    )?;
    Ok(NetworkParameters {
        config: config.clone(),
        conv,
        hidden,
        output,
    })
}

impl NetworkParameters {
    pub fn layers(&self) -> impl Iterator<Item = &ParamLayer> {
        self.conv.iter().chain([&self.hidden, &self.output])
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut ParamLayer> {
        self.conv
            .iter_mut()
            .chain([&mut self.hidden, &mut self.output])
    }

    pub fn layer_count(&self) -> usize {
        self.conv.len() + 2
    }

    /// Every parameter tensor: weight then bias, layer by layer.
    pub fn tensors(&self) -> Vec<&Tensor> {
        self.layers().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    /// Expected shapes of [`Self::tensors`] for `config`.
    pub fn expected_shapes(config: &ArchitectureConfig) -> Vec<Vec<usize>> {
        let k = config.kernel_size;
        let mut shapes = Vec::new();
        for i in 0..config.conv_layer_count() {
            let (c_out, c_in) = config.conv_channels(i).expect("index in range");
            shapes.push(vec![c_out, c_in, k, k]);
            shapes.push(vec![c_out]);
        }
        shapes.push(vec![config.flat_features(), config.hidden_units]);
        shapes.push(vec![config.hidden_units]);
        shapes.push(vec![config.hidden_units, config.num_classes]);
        shapes.push(vec![config.num_classes]);
        shapes
    }

    pub fn conv_layer(&self, layer: LayerName) -> Option<&ParamLayer> {
        self.conv.get(layer.conv_index())
    }

    /// Put the parameters on `tape` as leaves. The MLP is skipped when not
    /// needed, which keeps probing of early layers cheap.
    pub fn bind(&self, tape: &mut Tape, with_classifier: bool) -> BoundNetwork {
        self.bind_as(tape, with_classifier, |t| t.clone())
    }

    /// [`Self::bind`] onto a tape of another precision.
    pub fn bind_cast<T: Element>(&self, tape: &mut TapeOf<T>, with_classifier: bool) -> BoundNetwork {
        self.bind_as(tape, with_classifier, Tensor::cast)
    }

    fn bind_as<T: Element>(
        &self,
        tape: &mut TapeOf<T>,
        with_classifier: bool,
        convert: impl Fn(&Tensor) -> TensorOf<T>,
    ) -> BoundNetwork {
        let mut put = |l: &ParamLayer| (tape.leaf(convert(&l.weight)), tape.leaf(convert(&l.bias)));
        let conv = self.conv.iter().map(&mut put).collect();
        let classifier = with_classifier.then(|| (put(&self.hidden), put(&self.output)));
        BoundNetwork {
            config: self.config.clone(),
            conv,
            classifier,
        }
    }

    pub fn check_input(&self, batch: &Tensor) -> Result<()> {
        let cfg = &self.config;
        match *batch.shape() {
            [_, c, h, w] if c == cfg.input_channels && h == cfg.input_size && w == cfg.input_size => {
                Ok(())
            }
            _ => Err(Error::Shape(format!(
                "network expects input [N,{},{},{}], got {:?}",
                cfg.input_channels,
                cfg.input_size,
                cfg.input_size,
                batch.shape()
            ))),
        }
    }
}

/// Parameters bound to a tape as leaf variables.
#[derive(Debug)]
pub struct BoundNetwork {
    config: ArchitectureConfig,
    pub conv: Vec<(Var, Var)>,
    pub classifier: Option<((Var, Var), (Var, Var))>,
}

/// Tape variables produced by one forward pass.
#[derive(Debug)]
pub struct Activations {
    pub pre: Vec<Var>,
    pub post: Vec<Var>,
    pub logits: Option<Var>,
}

impl BoundNetwork {
    /// Record the forward pass. With `stop_after = Some(layer)` the pass
    /// ends after that conv layer and no logits are produced.
    pub fn forward<T: Element>(
        &self,
        tape: &mut TapeOf<T>,
        input: Var,
        stop_after: Option<LayerName>,
    ) -> Result<Activations> {
        let last = match stop_after {
            Some(layer) if !self.config.has_layer(layer) => {
                return Err(Error::InvalidArgument(format!(
                    "layer {layer} is not part of this architecture"
                )))
            }
            Some(layer) => layer.conv_index(),
            None => self.conv.len() - 1,
        };
        let mut pre = Vec::new();
        let mut post = Vec::new();
        let mut x = input;
        for &(w, b) in &self.conv[..=last] {
            let z = tape.conv2d(x, w, b)?;
            x = tape.relu(z);
            pre.push(z);
            post.push(x);
        }
        let logits = match (stop_after, &self.classifier) {
            (None, Some(((hw, hb), (ow, ob)))) => {
                let flat = tape.flatten(x)?;
                let h = tape.linear(flat, *hw, *hb)?;
                let h = tape.relu(h);
                Some(tape.linear(h, *ow, *ob)?)
            }
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "classifier was not bound; cannot produce logits".into(),
                ))
            }
            (Some(_), _) => None,
        };
        Ok(Activations { pre, post, logits })
    }
}

/// Pre- and post-activation of one conv layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvActivation {
    pub pre: Tensor,
    pub post: Tensor,
}

pub type LayerCapture = BTreeMap<LayerName, ConvActivation>;

#[derive(Clone, Debug)]
pub struct ForwardOutput {
    pub logits: Tensor,
    pub capture: LayerCapture,
}

/// Inference: logits plus the pre/post activations of the requested layers.
pub fn forward(
    params: &NetworkParameters,
    batch: &Tensor,
    capture: &[LayerName],
) -> Result<ForwardOutput> {
    params.check_input(batch)?;
    for layer in capture {
        if !params.config.has_layer(*layer) {
            return Err(Error::InvalidArgument(format!(
                "layer {layer} is not part of this architecture"
            )));
        }
    }
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, true);
    let input = tape.leaf(batch.clone());
    let acts = bound.forward(&mut tape, input, None)?;
    let logits = tape.value(acts.logits.expect("full forward")).clone();
    let capture = capture
        .iter()
        .map(|&layer| {
            let i = layer.conv_index();
            (
                layer,
                ConvActivation {
                    pre: tape.value(acts.pre[i]).clone(),
                    post: tape.value(acts.post[i]).clone(),
                },
            )
        })
        .collect();
    Ok(ForwardOutput { logits, capture })
}

/// Conv activations for every layer up to and including `last`, without
/// running the classifier.
pub fn conv_activations(
    params: &NetworkParameters,
    batch: &Tensor,
    last: LayerName,
) -> Result<Vec<ConvActivation>> {
    params.check_input(batch)?;
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, false);
    let input = tape.leaf(batch.clone());
    let acts = bound.forward(&mut tape, input, Some(last))?;
    Ok(acts
        .pre
        .iter()
        .zip(&acts.post)
        .map(|(&z, &a)| ConvActivation {
            pre: tape.value(z).clone(),
            post: tape.value(a).clone(),
        })
        .collect())
}
