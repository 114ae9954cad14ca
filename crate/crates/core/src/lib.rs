//! Virtual electrophysiology for Retina-Net style convolutional networks.
//!
//! The crate trains small retina/ventral-stream CNNs on CIFAR-10 and then
//! characterises every convolutional cell by probing it with greyscale
//! gratings and uniform hue fields, the way a physiologist would probe a
//! neuron. Cells are classified as spatially, colour, or double opponent
//! relative to their response to a black input.
//!
//! Module map:
//!
//! * [`tensor`]: dense `f32`/`f64` tensors, a recording tape with reverse-mode
//!   gradients, RMSProp and Xavier initialisation.
//! * [`retinanet`]: the architecture family, training loop, evaluation,
//!   weight-statistics controls and the checkpoint format.
//! * [`stimuli`]: gratings, hue fields, colour-space conversions and the
//!   input transforms used by the control experiments.
//! * [`electrophys`]: tuning curves, opponency classification and
//!   population reports.
//! * [`sensitivity`]: receptive-field maps and hue-sensitivity curves.
//! * [`harness`]: CIFAR-10 ingestion, sweeps, summaries and CLI plumbing.

pub mod electrophys;
pub mod error;
pub mod harness;
pub mod retinanet;
pub mod rng;
pub mod sensitivity;
pub mod stimuli;
pub mod tensor;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use tensor::Tensor;
