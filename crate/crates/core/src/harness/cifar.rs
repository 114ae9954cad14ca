//! CIFAR-10 binary batches: 1 label byte then 3072 pixel bytes per record
//! (1024 R, 1024 G, 1024 B, row-major).

use crate::error::{Error, Result};
use crate::retinanet::Dataset;
use std::fs;
use std::path::Path;

pub const RECORD_LEN: usize = 3073;
pub const IMAGE_SIZE: usize = 32;
pub const TRAIN_FILES: [&str; 5] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
];
pub const TEST_FILE: &str = "test_batch.bin";

pub fn parse_records(bytes: &[u8]) -> Result<Dataset> {
    if bytes.len() % RECORD_LEN != 0 {
        return Err(Error::Dataset(format!(
            "{} bytes is not a whole number of {RECORD_LEN}-byte records",
            bytes.len()
        )));
    }
    let n = bytes.len() / RECORD_LEN;
    let mut labels = Vec::with_capacity(n);
    let mut images = Vec::with_capacity(n * (RECORD_LEN - 1));
    for (i, rec) in bytes.chunks_exact(RECORD_LEN).enumerate() {
        if rec[0] > 9 {
            return Err(Error::Dataset(format!("record {i} has label byte {}", rec[0])));
        }
        labels.push(rec[0]);
        images.extend(rec[1..].iter().map(|&b| f32::from(b) / 255.0));
    }
    Dataset::new(3, IMAGE_SIZE, images, labels)
}

/// Inverse of [`parse_records`] for one image given as raw bytes.
pub fn encode_record(label: u8, pixels: &[u8]) -> Result<Vec<u8>> {
    if label > 9 || pixels.len() != RECORD_LEN - 1 {
        return Err(Error::InvalidArgument(format!(
            "record needs a label in 0..=9 and {} pixels",
            RECORD_LEN - 1
        )));
    }
    let mut out = Vec::with_capacity(RECORD_LEN);
    out.push(label);
    out.extend_from_slice(pixels);
    Ok(out)
}

/// Quantise a parsed dataset back to its record bytes.
pub fn encode_dataset(data: &Dataset) -> Result<Vec<u8>> {
    if data.channels() != 3 || data.size() != IMAGE_SIZE {
        return Err(Error::InvalidArgument("only 3x32x32 datasets encode as CIFAR-10".into()));
    }
    let mut out = Vec::with_capacity(data.len() * RECORD_LEN);
    for i in 0..data.len() {
        let pixels: Vec<u8> = data.image(i).iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect();
        out.extend(encode_record(data.label(i), &pixels)?);
    }
    Ok(out)
}

fn read_batch(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path)
        .map_err(|e| Error::Dataset(format!("cannot read {}: {e}", path.display())))?;
    parse_records(&bytes)
}

/// Load the five training batches and the test batch from `dir`.
pub fn load_cifar10(dir: &Path) -> Result<(Dataset, Dataset)> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for name in TRAIN_FILES {
        let batch = read_batch(&dir.join(name))?;
        for i in 0..batch.len() {
            images.extend_from_slice(batch.image(i));
        }
        labels.extend_from_slice(batch.labels());
    }
    let train = Dataset::new(3, IMAGE_SIZE, images, labels)?;
    let test = read_batch(&dir.join(TEST_FILE))?;
    Ok((train, test))
}
