use oppnet::harness::{
    emit_summary, run_sweep_with_data, synthetic_dataset, ArchitectureOverrides, ExperimentConfig,
    Grouping, RunLedger, RunStatus, LEDGER_FILE,
};
use oppnet::retinanet::{load_checkpoint, LayerName};
use oppnet::stimuli::SpatialGrid;
use std::fs;
use std::path::Path;

fn tiny_config(out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::desk_scale();
    cfg.preset = "smoke".into();
    cfg.bottleneck_widths = vec![1, 4];
    cfg.ventral_depths = vec![0, 1];
    cfg.repeats = 2;
    cfg.training.epochs = 1;
    cfg.training.batch_size = 16;
    cfg.train_subset = None;
    cfg.architecture = ArchitectureOverrides {
        base_channels: Some(4),
        kernel_size: Some(3),
        hidden_units: Some(8),
    };
    cfg.probe.spatial_grid = SpatialGrid {
        thetas: vec![0.0, 45.0, 90.0, 135.0],
        frequencies: vec![1.0, 2.0],
        phases: vec![0.0, 180.0],
        size: 8,
    };
    cfg.output = out.to_path_buf();
    cfg.workers = 2;
    cfg
}

#[test]
fn sweep_runs_resumes_and_reproduces() {
    let train = synthetic_dataset(48, 8, 1).unwrap();
    let test = synthetic_dataset(16, 8, 2).unwrap();
    let a = tempfile::tempdir().unwrap();
    let cfg = tiny_config(a.path());

    let first = run_sweep_with_data(&cfg, &train, &test).unwrap();
    assert_eq!(first.records.len(), 8);
    assert_eq!((first.trained, first.skipped, first.failed), (8, 0, 0));
    for r in &first.records {
        assert_eq!(r.status, RunStatus::Complete);
        load_checkpoint(r.checkpoint.as_ref().unwrap()).unwrap();
        for f in ["history.json", "sensitivity.csv", "probe/cells.csv", "probe/layers.csv"] {
            assert!(r.dir.join(f).exists(), "{f} missing");
        }
    }

    let again = run_sweep_with_data(&cfg, &train, &test).unwrap();
    assert_eq!((again.trained, again.skipped), (0, 8));
    assert_eq!(again.records, first.records);
    assert_eq!(RunLedger::new(a.path().join(LEDGER_FILE)).load().unwrap().len(), 8);

    // A second, single-worker sweep elsewhere reproduces every artefact.
    let b = tempfile::tempdir().unwrap();
    let mut cfg_b = tiny_config(b.path());
    cfg_b.workers = 1;
    let second = run_sweep_with_data(&cfg_b, &train, &test).unwrap();
    for (x, y) in first.records.iter().zip(&second.records) {
        assert_eq!(x.key, y.key);
        for f in ["model.oppn", "probe/report.json", "sensitivity.json"] {
            assert_eq!(fs::read(x.dir.join(f)).unwrap(), fs::read(y.dir.join(f)).unwrap(), "{f}");
        }
    }

    let summary = emit_summary(&first.records, &Grouping::default()).unwrap();
    assert_eq!(summary.accuracy.len(), 4);
    assert!(summary.accuracy.iter().all(|r| r.stats.n == 2));
    // Widths {1, 4} and depths {0, 1} all fall in "Narrow + Shallow".
    assert_eq!(summary.sensitivity.len(), 1);
    assert_eq!(summary.sensitivity[0].group, "Narrow + Shallow");
    assert_eq!(summary.sensitivity[0].curve.models, 8);
    let out = a.path().join("summary");
    summary.write_to(&out).unwrap();
    assert!(fs::read_to_string(out.join("fractions.csv")).unwrap().starts_with("# preset: smoke"));
}

#[test]
fn interrupted_sweep_resumes_to_the_same_result() {
    let train = synthetic_dataset(32, 8, 3).unwrap();
    let test = synthetic_dataset(8, 8, 4).unwrap();
    let full_dir = tempfile::tempdir().unwrap();
    let full = run_sweep_with_data(&tiny_config(full_dir.path()), &train, &test).unwrap();

    let part_dir = tempfile::tempdir().unwrap();
    let mut partial = tiny_config(part_dir.path());
    partial.bottleneck_widths = vec![1];
    run_sweep_with_data(&partial, &train, &test).unwrap();
    let resumed = run_sweep_with_data(&tiny_config(part_dir.path()), &train, &test).unwrap();
    assert_eq!((resumed.trained, resumed.skipped), (4, 4));
    for (x, y) in full.records.iter().zip(&resumed.records) {
        assert_eq!(fs::read(x.dir.join("model.oppn")).unwrap(), fs::read(y.dir.join("model.oppn")).unwrap());
    }
}

#[test]
fn failed_runs_are_recorded_and_the_sweep_continues() {
    let train = synthetic_dataset(16, 8, 5).unwrap();
    let test = synthetic_dataset(8, 8, 6).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(dir.path());
    cfg.bottleneck_widths = vec![2];
    cfg.repeats = 1;
    // Depth-0 networks have no Ventral1 layer, so those runs fail.
    cfg.probe.sensitivity_layer = LayerName::Ventral(1);
    let out = run_sweep_with_data(&cfg, &train, &test).unwrap();
    assert_eq!((out.trained, out.failed), (1, 1));
    assert_eq!(out.records[0].status, RunStatus::Failed);
    assert!(out.records[0].error.as_deref().unwrap().contains("Ventral1"));
    assert_eq!(out.records[1].status, RunStatus::Complete);
    let rerun = run_sweep_with_data(&cfg, &train, &test).unwrap();
    assert_eq!((rerun.skipped, rerun.failed), (1, 1));
}
