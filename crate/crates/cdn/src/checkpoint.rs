//! The CDN1 checkpoint file.
//!
//! Layout: the magic bytes `CDN1`, a little-endian `u64` header length,
//! the UTF-8 JSON header, then every parameter block as raw little-endian
//! f32 values in header order. Block offsets in the header are relative to
//! the start of the data section.

use std::fs;
use std::path::Path;

use cdn_core::data::Vocabulary;
use cdn_core::model::{Checkpoint, ModelConfig, ParamBlock, TrainingMeta};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"CDN1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (missing CDN1 magic)")]
    BadMagic,
    #[error("checkpoint truncated")]
    Truncated,
    #[error("checkpoint header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("block {name}: {detail}")]
    Block { name: String, detail: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Serialize, Deserialize)]
struct BlockEntry {
    name: String,
    shape: Vec<usize>,
    offset: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: ModelConfig,
    vocabulary: Vocabulary,
    meta: TrainingMeta,
    blocks: Vec<BlockEntry>,
}

pub fn encode(ck: &Checkpoint) -> Vec<u8> {
    let mut offset = 0u64;
    let blocks = ck
        .blocks
        .iter()
        .map(|b| {
            let e = BlockEntry { name: b.name.clone(), shape: b.shape.clone(), offset };
            offset += 4 * b.data.len() as u64;
            e
        })
        .collect();
    let header =
        Header { format_version: ck.format_version, config: ck.config.clone(), vocabulary: ck.vocab.clone(), meta: ck.meta, blocks };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(12 + json.len() + offset as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for b in &ck.blocks {
        for v in &b.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let len_bytes: [u8; 8] = bytes.get(4..12).ok_or(CheckpointError::Truncated)?.try_into().unwrap();
    let hlen = usize::try_from(u64::from_le_bytes(len_bytes)).map_err(|_| CheckpointError::Truncated)?;
    let header_end = 12usize.checked_add(hlen).ok_or(CheckpointError::Truncated)?;
    let header: Header = serde_json::from_slice(bytes.get(12..header_end).ok_or(CheckpointError::Truncated)?)?;
    let data = &bytes[header_end..];
    let mut blocks = Vec::with_capacity(header.blocks.len());
    let mut expected = 0u64;
    for e in header.blocks {
        let bad = |detail: &str| CheckpointError::Block { name: e.name.clone(), detail: detail.into() };
        if e.offset != expected {
            return Err(bad("offset out of order"));
        }
        let n = e.shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| bad("shape overflows"))?;
        let start = e.offset as usize;
        let raw = start.checked_add(4 * n).and_then(|end| data.get(start..end)).ok_or(CheckpointError::Truncated)?;
        let values = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        expected += 4 * n as u64;
        blocks.push(ParamBlock { name: e.name, shape: e.shape, data: values });
    }
    if data.len() as u64 != expected {
        return Err(CheckpointError::Block { name: "<end>".into(), detail: "trailing bytes after the last block".into() });
    }
    Ok(Checkpoint { format_version: header.format_version, config: header.config, vocab: header.vocabulary, blocks, meta: header.meta })
}

pub fn save(path: &Path, ck: &Checkpoint) -> Result<(), CheckpointError> {
    fs::write(path, encode(ck)).map_err(|source| CheckpointError::Io { path: path.display().to_string(), source })
}

pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io { path: path.display().to_string(), source })?;
    decode(&bytes)
}
