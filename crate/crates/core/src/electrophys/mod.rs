//! Tuning curves and opponency classification.
//!
//! A cell is one filter at one spatial position. Its tuning curve is its
//! response to every stimulus of a bank, paired with its response to a
//! black input (the baseline). Classification compares the two exactly,
//! with no tolerance.

mod classify;
mod probe;
mod report;

pub use classify::{
    classify, classify_double, classify_responses, hue_bin, most_excitatory_hue, most_inhibitory_hue,
    preferred_stimulus, HueBin, HuePick, OpponencyClass,
};
pub use probe::{probe_cell, probe_cells, CellId, CellSampling, TuningCurve};
pub use report::{
    population_report, profile_cell, CellProfile, ClassFractions, LayerReport, PopulationReport,
};
