//! The Retina-Net family: a two-layer retina with a channel bottleneck,
//! a stack of ventral convolutions, and a two-layer MLP classifier.

pub mod checkpoint;
mod config;
mod controls;
mod data;
mod network;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use config::{ArchitectureConfig, LayerName};
pub use controls::gaussian_resample;
pub use data::Dataset;
pub use network::{
    build_network, conv_activations, forward, Activations, BoundNetwork, ConvActivation,
    ForwardOutput, LayerCapture, NetworkParameters, ParamLayer,
};
pub use train::{evaluate, train, train_with, EpochRecord, SampleTransform, TrainingConfig};
