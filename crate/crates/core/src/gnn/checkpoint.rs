//! Checkpoint file: magic, little-endian `u64` header length, JSON header,
//! then every parameter array as little-endian `f64` in manifest order.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use super::config::ModelConfig;
use super::params::{Layout, ModelParams};
use super::{GnnError, Model};
use crate::tensor::Array;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"MSFRAGCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub seed: u64,
    pub config: ModelConfig,
    pub manifest: Vec<ManifestEntry>,
}

pub fn write_checkpoint<W: Write>(mut w: W, model: &Model<f64>) -> Result<(), GnnError> {
    let layout = Layout::new(model.config());
    let header = CheckpointHeader {
        format_version: CHECKPOINT_VERSION,
        seed: model.config().seed,
        config: model.config().clone(),
        manifest: layout
            .specs
            .iter()
            .map(|s| ManifestEntry { name: s.name.clone(), rows: s.rows, cols: s.cols })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| GnnError::Checkpoint(e.to_string()))?;
    let io = |e: std::io::Error| GnnError::Io(e.to_string());
    w.write_all(CHECKPOINT_MAGIC).map_err(io)?;
    w.write_all(&(json.len() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&json).map_err(io)?;
    let mut buf = Vec::with_capacity(model.params().num_scalars() * 8);
    for a in model.params().arrays() {
        for &x in a.data() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    w.write_all(&buf).map_err(io)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Model<f64>, GnnError> {
    let bad = |m: String| GnnError::Checkpoint(m);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| GnnError::Io(e.to_string()))?;
    if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("not a checkpoint file (bad magic)".into()));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes.get(16..16 + hlen).ok_or_else(|| bad("truncated header".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(body).map_err(|e| bad(e.to_string()))?;
    if header.format_version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported format version {}", header.format_version)));
    }
    let layout = Layout::new(&header.config);
    if layout.specs.len() != header.manifest.len()
        || layout
            .specs
            .iter()
            .zip(&header.manifest)
            .any(|(s, m)| s.name != m.name || s.rows != m.rows || s.cols != m.cols)
    {
        return Err(bad("manifest does not match the configuration".into()));
    }
    let mut data = &bytes[16 + hlen..];
    let mut arrays = Vec::with_capacity(header.manifest.len());
    for m in &header.manifest {
        let n = m.rows * m.cols;
        if data.len() < n * 8 {
            return Err(bad(format!("truncated data for {}", m.name)));
        }
        let vals = data[..n * 8].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        arrays.push(Array::new(m.rows, m.cols, vals)?);
        data = &data[n * 8..];
    }
    if !data.is_empty() {
        return Err(bad(format!("{} trailing bytes", data.len())));
    }
    let params = ModelParams::from_arrays(&header.config, arrays).map_err(bad)?;
    Model::new(header.config, params)
}
