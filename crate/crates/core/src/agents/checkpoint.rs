//! Binary checkpoint container.
//!
//! Layout (little-endian): `DRLC`, format version u32, metadata length u32,
//! UTF-8 JSON metadata, then each tensor as rank u32, rank × dim u32 and a
//! row-major f32 payload.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::Architecture;
use crate::envs::ActionKind;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DRLC";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dqn,
    Trpo,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Dqn => "dqn",
            Algorithm::Trpo => "trpo",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dqn" => Ok(Algorithm::Dqn),
            "trpo" => Ok(Algorithm::Trpo),
            _ => Err(Error::InvalidArgument(format!("unknown algorithm {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub algorithm: Algorithm,
    /// Q-network or policy mean network.
    pub architecture: Architecture,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_architecture: Option<Architecture>,
    pub action_kind: ActionKind,
    /// Training scenario.
    pub env: String,
    pub seed: u64,
    /// Environment steps trained.
    pub iterations: u64,
    pub tensors: usize,
    /// Training hyperparameters, for provenance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    /// Converts f64 values, which must already be f32-representable to
    /// round-trip exactly.
    pub fn from_f64(dims: Vec<usize>, values: &[f64]) -> Self {
        Tensor {
            dims,
            data: values.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }
}

pub fn encode_checkpoint(meta: &CheckpointMeta, tensors: &[Tensor]) -> Result<Vec<u8>> {
    if meta.tensors != tensors.len() {
        return Err(Error::ContractViolation(format!(
            "metadata announces {} tensors, {} given",
            meta.tensors,
            tensors.len()
        )));
    }
    let json = serde_json::to_vec(meta)?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for t in tensors {
        if t.dims.iter().product::<usize>() != t.data.len() {
            return Err(Error::ContractViolation(format!(
                "tensor dims {:?} do not match {} values",
                t.dims,
                t.data.len()
            )));
        }
        out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
        for &d in &t.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::CorruptCheckpoint {
                offset: self.pos,
                reason: format!("truncated while reading {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(CheckpointMeta, Vec<Tensor>)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::CorruptCheckpoint {
            offset: 0,
            reason: "bad magic bytes".into(),
        });
    }
    let version = r.u32("format version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::CorruptCheckpoint {
            offset: 4,
            reason: format!("unsupported format version {version}"),
        });
    }
    let len = r.u32("metadata length")? as usize;
    let meta_at = r.pos;
    let meta: CheckpointMeta =
        serde_json::from_slice(r.take(len, "metadata")?).map_err(|e| Error::CorruptCheckpoint {
            offset: meta_at,
            reason: format!("bad metadata: {e}"),
        })?;
    let mut tensors = Vec::with_capacity(meta.tensors);
    for k in 0..meta.tensors {
        let what = format!("tensor {k}");
        let rank = r.u32(&what)? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.u32(&what)? as usize);
        }
        let count: usize = dims.iter().product();
        let payload = r.take(count * 4, &what)?;
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        tensors.push(Tensor { dims, data });
    }
    if r.pos != bytes.len() {
        return Err(Error::CorruptCheckpoint {
            offset: r.pos,
            reason: format!("{} trailing bytes", bytes.len() - r.pos),
        });
    }
    Ok((meta, tensors))
}

pub fn save_checkpoint(path: &Path, meta: &CheckpointMeta, tensors: &[Tensor]) -> Result<()> {
    let bytes = encode_checkpoint(meta, tensors)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointMeta, Vec<Tensor>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
