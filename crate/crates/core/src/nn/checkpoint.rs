//! `RGN1` checkpoint container: magic, u32 little-endian header length, JSON
//! header, then little-endian f64 parameters.

use std::path::Path;

use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"RGN1";

pub fn encode(header: &serde_json::Value, params: &[f64]) -> Vec<u8> {
    let json = serde_json::to_vec(header).expect("header serializes");
    let mut out = Vec::with_capacity(8 + json.len() + 8 * params.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<(serde_json::Value, Vec<f64>)> {
    if bytes.get(..4) != Some(CHECKPOINT_MAGIC.as_slice()) {
        return Err(Error::Format("missing RGN1 magic".into()));
    }
    let len = bytes
        .get(4..8)
        .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
        .ok_or_else(|| Error::Format("checkpoint truncated".into()))?;
    let json = bytes
        .get(8..8 + len)
        .ok_or_else(|| Error::Format("checkpoint header truncated".into()))?;
    let header = serde_json::from_slice(json)?;
    let body = &bytes[8 + len..];
    if !body.len().is_multiple_of(8) {
        return Err(Error::Format("checkpoint parameter block not a multiple of 8 bytes".into()));
    }
    let params = body
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    Ok((header, params))
}

pub fn save(path: impl AsRef<Path>, header: &serde_json::Value, params: &[f64]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(header, params)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<(serde_json::Value, Vec<f64>)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
