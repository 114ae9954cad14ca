//! Binary checkpoint format.
//!
//! ```text
//! "OPPN"                      4 bytes magic
//! version                     u32 little-endian
//! metadata length             u64 little-endian, in bytes
//! metadata                    UTF-8 JSON (see CheckpointMeta)
//! for each layer in order (Retina1, Retina2, Ventral1.., hidden, output):
//!     weight byte length      u64 little-endian
//!     weight values           f32 little-endian
//!     bias byte length        u64 little-endian
//!     bias values             f32 little-endian
//! ```

use super::config::ArchitectureConfig;
use super::network::{NetworkParameters, ParamLayer};
use super::train::{EpochRecord, TrainingConfig};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"OPPN";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub architecture: ArchitectureConfig,
    #[serde(default)]
    pub training: Option<TrainingConfig>,
    #[serde(default)]
    pub history: Vec<EpochRecord>,
    pub seed: u64,
    /// Training-input condition label (e.g. `rgb`, `channel_shuffled`).
    #[serde(default)]
    pub condition: Option<String>,
}

impl CheckpointMeta {
    pub fn untrained(architecture: ArchitectureConfig, seed: u64) -> Self {
        CheckpointMeta {
            architecture,
            training: None,
            history: Vec::new(),
            seed,
            condition: None,
        }
    }
}

pub fn encode(params: &NetworkParameters, meta: &CheckpointMeta) -> Result<Vec<u8>> {
    if meta.architecture != params.config {
        return Err(Error::Metadata(
            "metadata architecture differs from the parameters' architecture".into(),
        ));
    }
    let doc = serde_json::to_vec(meta)?;
    let payload: usize = params.tensors().iter().map(|t| 8 + 4 * t.len()).sum();
    let mut out = Vec::with_capacity(16 + doc.len() + payload);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(doc.len() as u64).to_le_bytes());
    out.extend_from_slice(&doc);
    for t in params.tensors() {
        out.extend_from_slice(&((4 * t.len()) as u64).to_le_bytes());
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(Error::Truncated(format!(
                "{what}: need {n} bytes at offset {}, file has {}",
                self.pos,
                self.bytes.len()
            )));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<(NetworkParameters, CheckpointMeta)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic").map_err(|_| Error::BadMagic)? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = u32::from_le_bytes(r.take(4, "version")?.try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let doc_len = r.u64("metadata length")? as usize;
    let doc = r.take(doc_len, "metadata")?;
    let doc = std::str::from_utf8(doc).map_err(|e| Error::Metadata(e.to_string()))?;
    let meta: CheckpointMeta = serde_json::from_str(doc)?;
    meta.architecture
        .validate()
        .map_err(|e| Error::Metadata(e.to_string()))?;

    let shapes = NetworkParameters::expected_shapes(&meta.architecture);
    let mut tensors = Vec::with_capacity(shapes.len());
    for (i, shape) in shapes.into_iter().enumerate() {
        let what = format!("blob {i}");
        let len = r.u64(&what)? as usize;
        let expected: usize = 4 * shape.iter().product::<usize>();
        if len != expected {
            return Err(Error::Metadata(format!(
                "{what} holds {len} bytes but shape {shape:?} needs {expected}"
            )));
        }
        let raw = r.take(len, &what)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        tensors.push(Tensor::new(shape, data)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Metadata(format!(
            "{} trailing bytes after the last blob",
            bytes.len() - r.pos
        )));
    }
    let mut it = tensors.into_iter();
    let mut next = || ParamLayer {
        weight: it.next().expect("weight"),
        bias: it.next().expect("bias"),
    };
    let conv = (0..meta.architecture.conv_layer_count()).map(|_| next()).collect();
    let hidden = next();
    let output = next();
    Ok((
        NetworkParameters {
            config: meta.architecture.clone(),
            conv,
            hidden,
            output,
        },
        meta,
    ))
}

/// Write atomically: the file appears under `path` only once complete.
pub fn save_checkpoint(params: &NetworkParameters, meta: &CheckpointMeta, path: &Path) -> Result<()> {
    let bytes = encode(params, meta)?;
    let tmp = path.with_extension("oppn.partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(NetworkParameters, CheckpointMeta)> {
    decode(&fs::read(path)?)
}
