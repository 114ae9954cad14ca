//! Data ingestion, experiment sweeps, persistence and reporting.

pub mod cifar;
mod condition;
mod config;
mod summary;
mod synthetic;
mod sweep;

pub use cifar::load_cifar10;
pub use synthetic::synthetic_dataset;
pub use condition::{ConditionTransform, InputCondition, DEFAULT_MOSAIC_TILE};
pub use config::{ArchitectureOverrides, ExperimentConfig, ProbeConfig, DATASET_ENV};
pub use summary::{
    emit_summary, AccuracyRow, FractionRow, GroupSensitivity, Grouping, MeanStd,
    OpponencyTypeTable, SummaryTables,
};
pub use sweep::{
    execute_run, run_sweep, run_sweep_with_data, sweep_keys, PreparedData, RunKey, RunLedger,
    RunRecord, RunStatus, SweepOutcome, CHECKPOINT_FILE, LEDGER_FILE,
};
