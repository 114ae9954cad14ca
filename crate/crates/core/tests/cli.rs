use oppnet::harness::cifar::{encode_dataset, TEST_FILE, TRAIN_FILES};
use oppnet::harness::synthetic_dataset;
use std::fs;
use std::path::Path;
use std::process::Command;

fn oppnet(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_oppnet"))
        .args(args)
        .env_remove("OPPNET_CIFAR10_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "oppnet {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fake_cifar(dir: &Path) {
    for (i, name) in TRAIN_FILES.iter().enumerate() {
        let data = synthetic_dataset(8, 32, i as u64).unwrap();
        fs::write(dir.join(name), encode_dataset(&data).unwrap()).unwrap();
    }
    let data = synthetic_dataset(10, 32, 99).unwrap();
    fs::write(dir.join(TEST_FILE), encode_dataset(&data).unwrap()).unwrap();
}

const CONFIG: &str = r#"
preset = "desk-scale"
train_subset = 24
test_subset = 10
bottleneck_widths = [2]
ventral_depths = [1]
repeats = 1
[training]
epochs = 1
batch_size = 8
[architecture]
base_channels = 4
kernel_size = 3
hidden_units = 8
[probe.spatial_grid]
thetas = [0.0, 90.0]
frequencies = [1.0, 4.0]
phases = [0.0, 180.0]
"#;

#[test]
fn end_to_end_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("cifar");
    fs::create_dir_all(&data).unwrap();
    fake_cifar(&data);
    let config = tmp.path().join("exp.toml");
    fs::write(&config, CONFIG).unwrap();
    let cfg = config.to_str().unwrap();
    let d = data.to_str().unwrap();

    let run = tmp.path().join("single");
    let out = oppnet(&["train", "--config", cfg, "--dataset", d, "--output", run.to_str().unwrap()]);
    assert!(out.contains("trained nbn2_dvvs1_rep0"));
    let ckpt = run.join("model.oppn");
    let ck = ckpt.to_str().unwrap();

    let probe = tmp.path().join("probe");
    let table = oppnet(&["probe", "--checkpoint", ck, "--sampling", "all", "--output", probe.to_str().unwrap()]);
    assert!(table.starts_with("layer,cells,"));
    assert_eq!(table.lines().count(), 4);
    assert!(probe.join("cells.csv").exists());

    let rf = tmp.path().join("rf");
    let index = oppnet(&["rf", "--checkpoint", ck, "--layer", "retina2", "--output", rf.to_str().unwrap()]);
    assert_eq!(index.lines().count(), 3);
    assert!(rf.join("rf_Retina2_1.csv").exists());

    let sens = tmp.path().join("sens.csv");
    oppnet(&["sensitivity", "--checkpoint", ck, ck, "--output", sens.to_str().unwrap()]);
    let csv = fs::read_to_string(&sens).unwrap();
    assert_eq!(csv.lines().count(), 355);

    let sweep = tmp.path().join("sweep");
    let s = sweep.to_str().unwrap();
    let out = oppnet(&["sweep", "--config", cfg, "--dataset", d, "--output", s, "--repeats", "2"]);
    assert!(out.starts_with("2 runs: 2 trained"), "{out}");
    let out = oppnet(&["sweep", "--config", cfg, "--dataset", d, "--output", s, "--repeats", "2"]);
    assert!(out.starts_with("2 runs: 0 trained, 2 reused"), "{out}");
    let summary = tmp.path().join("summary");
    oppnet(&["report", "--runs", s, "--output", summary.to_str().unwrap()]);
    let acc = fs::read_to_string(summary.join("accuracy.csv")).unwrap();
    assert!(acc.lines().nth(2).unwrap().starts_with("rgb,2,1,"));
}

#[test]
fn missing_dataset_is_an_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_oppnet"))
        .args(["sweep", "--preset", "desk-scale"])
        .env_remove("OPPNET_CIFAR10_DIR")
        .env("RUST_BACKTRACE", "0")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("OPPNET_CIFAR10_DIR"));
}
