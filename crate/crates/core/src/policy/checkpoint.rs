//! Parameter checkpoints.
//!
//! ```text
//! magic        4 bytes "NAVP"
//! version      u32 LE
//! dim          u64 LE
//! rows, cols   u64 LE each (shape of W)
//! embedder     u64 LE fingerprint of the embedder config
//! logit_scale  f64 LE
//! value_head   u8
//! count        u64 LE
//! values       count x f32 LE
//! ```

use std::fs;
use std::path::Path;

use super::model::PolicyParams;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NAVP";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 * 4 + 8 + 1 + 8;

pub fn encode_params(p: &PolicyParams, embedder: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * p.data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [p.dim, p.rows(), p.cols()] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&embedder.to_le_bytes());
    out.extend_from_slice(&p.logit_scale.to_le_bytes());
    out.push(p.value_head as u8);
    out.extend_from_slice(&(p.data.len() as u64).to_le_bytes());
    for &v in &p.data {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

/// Decodes a checkpoint, refusing one trained against a different embedder.
pub fn decode_params(bytes: &[u8], embedder: u64) -> Result<PolicyParams> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::corrupt(0, "bad magic, not a policy checkpoint"));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::corrupt(bytes.len() as u64, "header truncated"));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    let (dim, rows, cols) = (u64_at(8) as usize, u64_at(16) as usize, u64_at(24) as usize);
    let found = u64_at(32);
    if found != embedder {
        return Err(Error::EmbedderMismatch {
            expected: found,
            found: embedder,
        });
    }
    let logit_scale = f64::from_le_bytes(bytes[40..48].try_into().unwrap());
    let value_head = match bytes[48] {
        0 => false,
        1 => true,
        _ => return Err(Error::corrupt(48, "bad value-head flag")),
    };
    let count = u64_at(49) as usize;
    let mut p = PolicyParams::zeros(dim, logit_scale, value_head);
    if rows != p.rows() || cols != p.cols() || count != p.data.len() {
        return Err(Error::corrupt(8, "parameter shapes are inconsistent"));
    }
    if bytes.len() - HEADER_LEN != 4 * count {
        return Err(Error::corrupt(
            HEADER_LEN as u64,
            "file length does not match parameter count",
        ));
    }
    for (v, c) in p.data.iter_mut().zip(bytes[HEADER_LEN..].chunks_exact(4)) {
        *v = f32::from_le_bytes(c.try_into().unwrap()) as f64;
    }
    p.check()?;
    Ok(p)
}

pub fn save_params(p: &PolicyParams, embedder: u64, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_params(p, embedder))?;
    Ok(())
}

pub fn load_params(path: impl AsRef<Path>, embedder: u64) -> Result<PolicyParams> {
    decode_params(&fs::read(path)?, embedder)
}
