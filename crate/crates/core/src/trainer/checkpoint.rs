//! Checkpoint container.
//!
//! ```text
//! VSC-CHECKPOINT\n
//! <one line of JSON header>\n
//! <payload: little-endian f64 values>
//! ```
//!
//! The header carries the format version, the training configuration, the
//! completed epoch, the RNG state, the Adam step count and a manifest giving
//! the name, shape and byte offset of every tensor in the payload. Model
//! parameters come first in store order, followed by the Adam first and
//! second moments.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::TrainConfig;
use crate::nn::{AdamConfig, AdamState, ParamStore, Tensor2D};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8] = b"VSC-CHECKPOINT\n";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("unsupported checkpoint version {found} (this build reads {FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("corrupt checkpoint: {0}")]
    CorruptPayload(String),
    #[error("checkpoint i/o on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Everything needed to recreate the random streams of a run. Streams are
/// keyed by `(purpose, epoch, batch)`, so the seed and the next epoch to run
/// pin down every future draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngState {
    pub seed: u64,
    pub next_epoch: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: TrainConfig,
    /// Number of completed epochs.
    pub epoch: u32,
    pub params: ParamStore,
    pub adam: AdamState,
    pub rng: RngState,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdamHeader {
    step: u64,
    config: AdamConfig,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    epoch: u32,
    config: TrainConfig,
    rng: RngState,
    adam: AdamHeader,
    tensors: Vec<TensorEntry>,
    payload_bytes: usize,
}

fn corrupt(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::CorruptPayload(msg.into())
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut tensors = Vec::new();
        let mut payload: Vec<u8> = Vec::new();
        let mut push = |name: String, t: &Tensor2D| {
            tensors.push(TensorEntry {
                name,
                rows: t.rows(),
                cols: t.cols(),
                offset: payload.len(),
            });
            for v in t.as_slice() {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        };
        for p in self.params.iter() {
            push(p.name.clone(), &p.value);
        }
        for (p, m) in self.params.iter().zip(&self.adam.m) {
            push(format!("adam.m.{}", p.name), m);
        }
        for (p, v) in self.params.iter().zip(&self.adam.v) {
            push(format!("adam.v.{}", p.name), v);
        }
        let header = Header {
            format_version: self.format_version,
            epoch: self.epoch,
            config: self.config.clone(),
            rng: self.rng,
            adam: AdamHeader {
                step: self.adam.step,
                config: self.adam.config,
            },
            tensors,
            payload_bytes: payload.len(),
        };
        let json = serde_json::to_string(&header).expect("header serializes");
        let mut out = Vec::with_capacity(MAGIC.len() + json.len() + 1 + payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(json.as_bytes());
        out.push(b'\n');
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let rest = bytes.strip_prefix(MAGIC).ok_or_else(|| corrupt("missing magic line"))?;
        let newline = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| corrupt("unterminated header"))?;
        let (header_bytes, payload) = (&rest[..newline], &rest[newline + 1..]);

        // read the version before committing to this version's schema
        let value: serde_json::Value =
            serde_json::from_slice(header_bytes).map_err(|e| corrupt(format!("header: {e}")))?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| corrupt("header lacks format_version"))?;
        if version != u64::from(FORMAT_VERSION) {
            return Err(CheckpointError::VersionMismatch {
                found: u32::try_from(version).unwrap_or(u32::MAX),
            });
        }
        let header: Header = serde_json::from_value(value).map_err(|e| corrupt(format!("header: {e}")))?;
        if payload.len() != header.payload_bytes {
            return Err(corrupt(format!(
                "payload is {} bytes, header declares {}",
                payload.len(),
                header.payload_bytes
            )));
        }

        let mut tensors = Vec::with_capacity(header.tensors.len());
        let mut expected_offset = 0;
        for t in &header.tensors {
            let len = t.rows * t.cols * 8;
            if t.offset != expected_offset || t.offset + len > payload.len() {
                return Err(corrupt(format!("tensor `{}` has a bad offset or length", t.name)));
            }
            let data = payload[t.offset..t.offset + len]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            tensors.push((t.name.as_str(), Tensor2D::from_vec(t.rows, t.cols, data).expect("sized above")));
            expected_offset += len;
        }
        if expected_offset != payload.len() {
            return Err(corrupt("manifest does not cover the payload"));
        }
        if tensors.len() % 3 != 0 {
            return Err(corrupt("tensor count is not params + two moment sets"));
        }
        let n = tensors.len() / 3;
        let mut params = ParamStore::new();
        let mut m = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for (k, (name, value)) in tensors.into_iter().enumerate() {
            match k / n {
                0 => {
                    params
                        .insert(name, value)
                        .map_err(|e| corrupt(e.to_string()))?;
                }
                1 => m.push((name.to_string(), value)),
                _ => v.push((name.to_string(), value)),
            }
        }
        for (p, ((mn, mt), (vn, vt))) in params.iter().zip(m.iter().zip(&v)) {
            if *mn != format!("adam.m.{}", p.name) || *vn != format!("adam.v.{}", p.name) {
                return Err(corrupt(format!("moment tensors out of order at `{}`", p.name)));
            }
            if mt.shape() != p.value.shape() || vt.shape() != p.value.shape() {
                return Err(corrupt(format!("moment shape mismatch for `{}`", p.name)));
            }
        }
        Ok(Checkpoint {
            format_version: header.format_version,
            config: header.config,
            epoch: header.epoch,
            params,
            adam: AdamState {
                config: header.adam.config,
                step: header.adam.step,
                m: m.into_iter().map(|(_, t)| t).collect(),
                v: v.into_iter().map(|(_, t)| t).collect(),
            },
            rng: header.rng,
        })
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), CheckpointError> {
    std::fs::write(path, ckpt.to_bytes()).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Checkpoint::from_bytes(&bytes)
}
