//! Probe stimuli and input transforms.
//!
//! Probe stimuli come in two banks: greyscale sinusoidal gratings for
//! spatial tuning and spatially uniform HSL hue fields for colour tuning.
//! The transforms here also cover the training-input conditions of the
//! control experiments.

mod bank;
pub mod colour;
mod grating;
mod transforms;

pub use bank::{
    build_hue_bank, build_spatial_bank, BankKind, SpatialGrid, StimulusBank, StimulusSpec,
};
pub use colour::{hsl_to_rgb, hsv_to_rgb, hue_jacobian, rgb_to_hsv, rgb_to_lab, Rgb};
pub use grating::{generate_grating, GratingSpec};
pub use transforms::{
    baseline_input, channel_shuffle, encode_for_network, generate_hue_field, hue_rotate,
    mosaic_shuffle, permute_channels, rgb_to_cielab, rgb_to_grey, HueStimulusSpec,
    CHANNEL_PERMUTATIONS,
};
