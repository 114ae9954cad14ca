//! Gradient analyses: receptive-field maps and hue sensitivity.

mod hue;
mod receptive;

pub use hue::{
    default_hue_grid, hue_sensitivity, is_near_kink, sensitivity_aggregate, HueSensitivityCurve,
};
pub use receptive::{receptive_field, ReceptiveFieldMap, BLANK_LEVEL};
