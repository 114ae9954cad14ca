use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use oppnet::electrophys::{population_report, CellId, CellSampling};
use oppnet::harness::{
    emit_summary, execute_run, load_cifar10, run_sweep, ExperimentConfig, Grouping,
    InputCondition, PreparedData, RunKey, RunLedger, RunStatus, LEDGER_FILE,
};
use oppnet::retinanet::{load_checkpoint, LayerName, NetworkParameters};
use oppnet::sensitivity::{default_hue_grid, hue_sensitivity, receptive_field, sensitivity_aggregate};
use oppnet::stimuli::{build_hue_bank, build_spatial_bank, SpatialGrid};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "oppnet", version, about = "Train Retina-Nets and probe them for opponent cells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a single model and write its checkpoint and probe reports.
    Train(TrainArgs),
    /// Run every (width, depth, repeat) combination of a sweep.
    Sweep(ExperimentArgs),
    /// Classify the cells of a checkpoint.
    Probe(ProbeArgs),
    /// Receptive-field maps of cells in one layer.
    Rf(RfArgs),
    /// Hue-sensitivity curve of one layer, averaged over checkpoints.
    Sensitivity(SensitivityArgs),
    /// Aggregate a sweep's run ledger into summary tables.
    Report(ReportArgs),
}

/// Flags that override the config file.
#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base preset when no config file is given: paper-scale or desk-scale.
    #[arg(long)]
    preset: Option<String>,
    /// CIFAR-10 binary directory (defaults to $OPPNET_CIFAR10_DIR).
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Comma-separated bottleneck widths.
    #[arg(long, value_delimiter = ',')]
    nbn: Option<Vec<usize>>,
    /// Comma-separated ventral depths.
    #[arg(long, value_delimiter = ',')]
    dvvs: Option<Vec<usize>>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f32>,
    /// rgb, greyscale, hue_rotated_90, cielab, mosaic(TILE) or channel_shuffled.
    #[arg(long)]
    condition: Option<InputCondition>,
    #[arg(long)]
    train_subset: Option<usize>,
    #[arg(long)]
    test_subset: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    sampling: Option<Sampling>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Repeat index, which selects the seed.
    #[arg(long, default_value_t = 0)]
    repeat: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sampling {
    Centre,
    All,
}

impl From<Sampling> for CellSampling {
    fn from(s: Sampling) -> Self {
        match s {
            Sampling::Centre => CellSampling::Centre,
            Sampling::All => CellSampling::All,
        }
    }
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Layers to classify (default: all conv layers).
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<LayerName>>,
    #[arg(long, value_enum, default_value = "centre")]
    sampling: Sampling,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct RfArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    layer: LayerName,
    /// Channels to map (default: all).
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<usize>>,
    /// Cell position (default: image centre).
    #[arg(long)]
    row: Option<usize>,
    #[arg(long)]
    col: Option<usize>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SensitivityArgs {
    /// One or more checkpoints; several are averaged with standard errors.
    #[arg(long, required = true, num_args = 1..)]
    checkpoint: Vec<PathBuf>,
    #[arg(long, default_value = "Retina2")]
    layer: LayerName,
    /// Output CSV file.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Sweep output directory holding the run ledger.
    #[arg(long)]
    runs: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::from_toml_file(path)
                .with_context(|| format!("loading {}", path.display()))?,
            (None, Some(p)) => ExperimentConfig::from_preset(p)?,
            (None, None) => ExperimentConfig::default(),
        };
        if let Some(v) = &self.dataset {
            cfg.dataset = Some(v.clone());
        }
        if let Some(v) = &self.output {
            cfg.output = v.clone();
        }
        if let Some(v) = &self.nbn {
            cfg.bottleneck_widths = v.clone();
        }
        if let Some(v) = &self.dvvs {
            cfg.ventral_depths = v.clone();
        }
        if let Some(v) = self.repeats {
            cfg.repeats = v;
        }
        if let Some(v) = self.epochs {
            cfg.training.epochs = v;
        }
        if let Some(v) = self.batch_size {
            cfg.training.batch_size = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.training.learning_rate = v;
        }
        if let Some(v) = self.condition {
            cfg.condition = v;
        }
        if self.train_subset.is_some() {
            cfg.train_subset = self.train_subset;
        }
        if self.test_subset.is_some() {
            cfg.test_subset = self.test_subset;
        }
        if let Some(v) = self.master_seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.sampling {
            cfg.probe.sampling = v.into();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Train(a) => train(a),
        Command::Sweep(a) => sweep(a),
        Command::Probe(a) => probe(a),
        Command::Rf(a) => rf(a),
        Command::Sensitivity(a) => sensitivity(a),
        Command::Report(a) => report(a),
    }
}

fn dataset(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.dataset_dir()
        .context("no dataset: pass --dataset or set OPPNET_CIFAR10_DIR")
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = a.experiment.resolve()?;
    let (nbn, dvvs) = match (&cfg.bottleneck_widths[..], &cfg.ventral_depths[..]) {
        ([n], [d]) => (*n, *d),
        _ => bail!("train needs exactly one --nbn and one --dvvs"),
    };
    let (train, test) = load_cifar10(&dataset(&cfg)?)?;
    let data = PreparedData::new(&cfg, &train, &test)?;
    let key = RunKey {
        bottleneck_width: nbn,
        ventral_depth: dvvs,
        repeat: a.repeat,
        condition: cfg.condition,
    };
    let record = execute_run(&cfg, key, &data, &cfg.output)?;
    println!(
        "trained {} to test accuracy {:.4}; checkpoint {}",
        key.dir_name(),
        record.test_accuracy.unwrap_or(f64::NAN),
        record.checkpoint.as_deref().unwrap_or(Path::new("-")).display()
    );
    Ok(())
}

fn sweep(a: ExperimentArgs) -> Result<()> {
    let cfg = a.resolve()?;
    dataset(&cfg)?;
    let out = run_sweep(&cfg)?;
    println!(
        "{} runs: {} trained, {} reused, {} failed; ledger {}",
        out.records.len(),
        out.trained,
        out.skipped,
        out.failed,
        cfg.output.join(LEDGER_FILE).display()
    );
    Ok(())
}

fn load(path: &Path) -> Result<NetworkParameters> {
    Ok(load_checkpoint(path)
        .with_context(|| format!("loading {}", path.display()))?
        .0)
}

fn probe(a: ProbeArgs) -> Result<()> {
    let params = load(&a.checkpoint)?;
    let cfg = &params.config;
    let layers = a.layers.unwrap_or_else(|| cfg.conv_layer_names());
    let grid = SpatialGrid {
        size: cfg.input_size,
        ..SpatialGrid::default()
    };
    let spatial = build_spatial_bank(&grid, cfg.input_channels)?;
    let hue = build_hue_bank(cfg.input_size, cfg.input_channels)?;
    let report = population_report(&params, &layers, &spatial, &hue, &a.sampling.into())?;
    report.write_to(&a.output)?;
    print!("{}", report.layer_summary_table());
    Ok(())
}

fn rf(a: RfArgs) -> Result<()> {
    let params = load(&a.checkpoint)?;
    let cfg = &params.config;
    let channels = match a.channels {
        Some(c) => c,
        None => (0..cfg.layer_channels(a.layer).context("layer not in this network")?).collect(),
    };
    let (row, col) = (a.row.unwrap_or(cfg.input_size / 2), a.col.unwrap_or(cfg.input_size / 2));
    fs::create_dir_all(&a.output)?;
    let mut index = String::from("layer,channel,row,col,min,max,clipped,file\n");
    for channel in channels {
        let cell = CellId {
            layer: a.layer,
            channel,
            row,
            col,
        };
        let map = receptive_field(&params, cell)?;
        let file = format!("rf_{}_{channel}.csv", a.layer);
        let mut table = String::from("input_channel,y,x,raw,normalised\n");
        let [c, h, w] = *map.raw.shape() else { unreachable!() };
        for ch in 0..c {
            for y in 0..h {
                for x in 0..w {
                    let i = (ch * h + y) * w + x;
                    writeln!(table, "{ch},{y},{x},{},{}", map.raw.data()[i], map.normalised.data()[i])?;
                }
            }
        }
        fs::write(a.output.join(&file), table)?;
        writeln!(index, "{},{channel},{row},{col},{},{},{},{file}", a.layer, map.min, map.max, map.clipped)?;
    }
    fs::write(a.output.join("index.csv"), &index)?;
    print!("{index}");
    Ok(())
}

fn sensitivity(a: SensitivityArgs) -> Result<()> {
    let grid = default_hue_grid();
    let curves = a
        .checkpoint
        .iter()
        .map(|p| Ok(hue_sensitivity(&load(p)?, a.layer, &grid)?))
        .collect::<Result<Vec<_>>>()?;
    let curve = sensitivity_aggregate(&curves)?;
    if let Some(dir) = a.output.parent() {
        fs::create_dir_all(dir)?;
    }
    curve.write_csv(&a.output)?;
    println!("wrote {} hues over {} models to {}", curve.hues.len(), curve.models, a.output.display());
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let ledger = RunLedger::new(a.runs.join(LEDGER_FILE));
    let latest = ledger.latest()?;
    let mut records: Vec<_> = latest.into_values().collect();
    records.sort_by_key(|r| (r.key.condition, r.key.bottleneck_width, r.key.ventral_depth, r.key.repeat));
    let complete = records.iter().filter(|r| r.status == RunStatus::Complete).count();
    let summary = emit_summary(&records, &Grouping::default())?;
    summary.write_to(&a.output)?;
    println!("summarised {complete} of {} runs into {}", records.len(), a.output.display());
    Ok(())
}
