use super::cifar::load_cifar10;
use super::condition::InputCondition;
use super::config::ExperimentConfig;
use crate::electrophys::population_report;
use crate::error::{Error, Result};
use crate::retinanet::{
    build_network, load_checkpoint, save_checkpoint, train_with, CheckpointMeta, Dataset,
    EpochRecord, LayerName, SampleTransform, TrainingConfig,
};
use crate::rng::{derive_seed, seeded};
use crate::sensitivity::{default_hue_grid, hue_sensitivity};
use crate::stimuli::{build_hue_bank, build_spatial_bank, StimulusBank};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub const LEDGER_FILE: &str = "runs.jsonl";
pub const CHECKPOINT_FILE: &str = "model.oppn";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunKey {
    pub bottleneck_width: usize,
    pub ventral_depth: usize,
    pub repeat: usize,
    pub condition: InputCondition,
}

impl RunKey {
    /// Seed for this run. The condition is left out so that every condition
    /// starts from the same initial weights for a given cell of the grid.
    pub fn seed(&self, master: u64) -> u64 {
        derive_seed(
            master,
            &[self.bottleneck_width as u64, self.ventral_depth as u64, self.repeat as u64],
        )
    }

    pub fn dir_name(&self) -> String {
        format!(
            "nbn{}_dvvs{}_rep{}",
            self.bottleneck_width, self.ventral_depth, self.repeat
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Pending,
    Complete,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub key: RunKey,
    pub preset: String,
    pub seed: u64,
    pub status: RunStatus,
    pub dir: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub history: Vec<EpochRecord>,
    pub test_accuracy: Option<f64>,
    /// `report.json` of the population analysis.
    pub report: Option<PathBuf>,
    /// `sensitivity.json` of the bottleneck hue-sensitivity curve.
    pub sensitivity: Option<PathBuf>,
    pub error: Option<String>,
}

impl RunRecord {
    fn pending(key: RunKey, cfg: &ExperimentConfig, dir: PathBuf) -> Self {
        RunRecord {
            key,
            preset: cfg.preset.clone(),
            seed: key.seed(cfg.master_seed),
            status: RunStatus::Pending,
            dir,
            checkpoint: None,
            history: Vec::new(),
            test_accuracy: None,
            report: None,
            sensitivity: None,
            error: None,
        }
    }

    /// Complete with a checkpoint that still loads.
    pub fn is_reusable(&self) -> bool {
        self.status == RunStatus::Complete
            && self
                .checkpoint
                .as_deref()
                .is_some_and(|p| load_checkpoint(p).is_ok())
    }
}

/// Append-only line-delimited record of finished runs.
#[derive(Debug)]
pub struct RunLedger {
    path: PathBuf,
    lock: Mutex<()>,
}

impl RunLedger {
    pub fn new(path: PathBuf) -> Self {
        RunLedger {
            path,
            lock: Mutex::new(()),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, record: &RunRecord) -> Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(line.as_bytes())?;
        f.sync_data()?;
        Ok(())
    }

    /// All records in file order. A torn final line is ignored.
    pub fn load(&self) -> Result<Vec<RunRecord>> {
        if !self.path.exists() {
            return Ok(Vec::new());
        }
        let file = fs::File::open(&self.path)?;
        let lines: Vec<String> = BufReader::new(file).lines().collect::<std::io::Result<_>>()?;
        let mut out = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(line) {
                Ok(r) => out.push(r),
                Err(_) if i + 1 == lines.len() => log::warn!("ignoring torn ledger line {}", i + 1),
                Err(e) => return Err(e.into()),
            }
        }
        Ok(out)
    }

    /// The most recent record for each key.
    pub fn latest(&self) -> Result<HashMap<RunKey, RunRecord>> {
        Ok(self.load()?.into_iter().map(|r| (r.key, r)).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    /// One record per grid point, in sweep order.
    pub records: Vec<RunRecord>,
    pub trained: usize,
    pub skipped: usize,
    pub failed: usize,
}

/// Every key of the sweep in width, depth, repeat order.
pub fn sweep_keys(cfg: &ExperimentConfig) -> Vec<RunKey> {
    let mut keys = Vec::with_capacity(cfg.run_count());
    for &bottleneck_width in &cfg.bottleneck_widths {
        for &ventral_depth in &cfg.ventral_depths {
            for repeat in 0..cfg.repeats {
                keys.push(RunKey {
                    bottleneck_width,
                    ventral_depth,
                    repeat,
                    condition: cfg.condition,
                });
            }
        }
    }
    keys
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    let dir = cfg.dataset_dir().ok_or_else(|| {
        Error::Dataset(format!(
            "no dataset directory given and {} is not set",
            super::config::DATASET_ENV
        ))
    })?;
    let (train, test) = load_cifar10(&dir)?;
    run_sweep_with_data(cfg, &train, &test)
}

/// Inputs shared by every run of a sweep.
pub struct PreparedData {
    pub train: Dataset,
    pub test: Dataset,
    pub spatial_bank: StimulusBank,
    pub hue_bank: StimulusBank,
}

impl PreparedData {
    pub fn new(cfg: &ExperimentConfig, train: &Dataset, test: &Dataset) -> Result<Self> {
        let train = match cfg.train_subset {
            Some(n) => train.first(n),
            None => train.clone(),
        };
        let test = match cfg.test_subset {
            Some(n) => test.first(n),
            None => test.clone(),
        };
        let (train, test) = cfg.condition.prepare(&train, &test, cfg.master_seed)?;
        let channels = cfg.condition.input_channels();
        let grid = crate::stimuli::SpatialGrid {
            size: train.size(),
            ..cfg.probe.spatial_grid.clone()
        };
        Ok(PreparedData {
            spatial_bank: build_spatial_bank(&grid, channels)?,
            hue_bank: build_hue_bank(train.size(), channels)?,
            train,
            test,
        })
    }
}

pub fn run_sweep_with_data(cfg: &ExperimentConfig, train: &Dataset, test: &Dataset) -> Result<SweepOutcome> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output)?;
    let ledger = RunLedger::new(cfg.output.join(LEDGER_FILE));
    let previous = ledger.latest()?;
    let keys = sweep_keys(cfg);
    let mut slots: Vec<Option<RunRecord>> = keys
        .iter()
        .map(|k| previous.get(k).filter(|r| r.is_reusable()).cloned())
        .collect();
    let todo: Vec<usize> = (0..keys.len()).filter(|&i| slots[i].is_none()).collect();
    let skipped = keys.len() - todo.len();
    log::info!("sweep: {} runs, {} already complete", keys.len(), skipped);
    if todo.is_empty() {
        return Ok(SweepOutcome {
            records: slots.into_iter().map(|r| r.expect("filled")).collect(),
            trained: 0,
            skipped,
            failed: 0,
        });
    }

    let data = PreparedData::new(cfg, train, test)?;
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(todo.len()));
    let workers = cfg.workers.min(todo.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&slot) = todo.get(i) else { break };
                let record = run_guarded(cfg, keys[slot], &data);
                if let Err(e) = ledger.append(&record) {
                    log::error!("failed to append to run ledger: {e}");
                }
                results.lock().unwrap_or_else(|e| e.into_inner()).push((slot, record));
            });
        }
    });
    let mut failed = 0;
    for (slot, record) in results.into_inner().unwrap_or_else(|e| e.into_inner()) {
        if record.status == RunStatus::Failed {
            failed += 1;
        }
        slots[slot] = Some(record);
    }
    Ok(SweepOutcome {
        records: slots.into_iter().map(|r| r.expect("every slot ran")).collect(),
        trained: todo.len() - failed,
        skipped,
        failed,
    })
}

fn run_guarded(cfg: &ExperimentConfig, key: RunKey, data: &PreparedData) -> RunRecord {
    let dir = cfg.output.join(cfg.condition.to_string()).join(key.dir_name());
    let outcome = catch_unwind(AssertUnwindSafe(|| execute_run(cfg, key, data, &dir)));
    let error = match outcome {
        Ok(Ok(record)) => return record,
        Ok(Err(e)) => e.to_string(),
        Err(panic) => panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "run panicked".into()),
    };
    log::error!("run {} failed: {error}", key.dir_name());
    RunRecord {
        status: RunStatus::Failed,
        error: Some(error),
        ..RunRecord::pending(key, cfg, dir)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_vec_pretty(value)?)?;
    Ok(())
}

/// Train, save, probe and measure one model into `dir`.
pub fn execute_run(cfg: &ExperimentConfig, key: RunKey, data: &PreparedData, dir: &Path) -> Result<RunRecord> {
    fs::create_dir_all(dir)?;
    let mut record = RunRecord::pending(key, cfg, dir.to_path_buf());
    let arch = cfg.architecture(key.bottleneck_width, key.ventral_depth, data.train.size());
    log::info!("run {}: training {:?}", key.dir_name(), arch);
    let mut params = build_network(&arch, derive_seed(record.seed, &[0]))?;
    let training = TrainingConfig {
        seed: record.seed,
        ..cfg.training.clone()
    };
    let mut rng = seeded(derive_seed(record.seed, &[1]));
    let transform = key.condition.sample_transform();
    let history = train_with(
        &mut params,
        &data.train,
        &data.test,
        &training,
        &mut rng,
        transform.as_ref().map(|t| t as &dyn SampleTransform),
    )?;

    let checkpoint = dir.join(CHECKPOINT_FILE);
    let meta = CheckpointMeta {
        architecture: arch.clone(),
        training: Some(training),
        history: history.clone(),
        seed: record.seed,
        condition: Some(key.condition.to_string()),
    };
    save_checkpoint(&params, &meta, &checkpoint)?;
    write_json(&dir.join("history.json"), &history)?;

    let layers: Vec<LayerName> = if cfg.probe.layers.is_empty() {
        arch.conv_layer_names()
    } else {
        cfg.probe.layers.iter().copied().filter(|l| arch.has_layer(*l)).collect()
    };
    let report = population_report(&params, &layers, &data.spatial_bank, &data.hue_bank, &cfg.probe.sampling)?;
    let probe_dir = dir.join("probe");
    report.write_to(&probe_dir)?;

    let curve = hue_sensitivity(&params, cfg.probe.sensitivity_layer, &default_hue_grid())?;
    curve.write_csv(&dir.join("sensitivity.csv"))?;
    write_json(&dir.join("sensitivity.json"), &curve)?;

    record.status = RunStatus::Complete;
    record.test_accuracy = history.last().map(|h| h.test_accuracy);
    record.history = history;
    record.checkpoint = Some(checkpoint);
    record.report = Some(probe_dir.join("report.json"));
    record.sensitivity = Some(dir.join("sensitivity.json"));
    write_json(&dir.join("run.json"), &record)?;
    Ok(record)
}
