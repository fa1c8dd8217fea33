//! Single-file checkpoint format.
//!
//! Layout: magic `ZVCK`, u32 LE format version, u64 LE header length, JSON
//! header (config echo plus per-parameter name/shape/offset records), then
//! the raw little-endian f64 parameter data in header order. Loading
//! restores every bit.

use super::config::ModelConfig;
use super::Model;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"ZVCK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    dtype: String,
    config: ModelConfig,
    params: Vec<ParamRecord>,
}

#[derive(Serialize, Deserialize)]
struct ParamRecord {
    name: String,
    rows: usize,
    cols: usize,
    /// Offset into the data section, in f64 elements.
    offset: u64,
}

/// Serializes a model to bytes (exposed so byte-level reproducibility can
/// be asserted without touching the filesystem).
pub fn to_bytes(model: &Model) -> Vec<u8> {
    let entries = model.params().entries();
    let mut records = Vec::with_capacity(entries.len());
    let mut offset = 0u64;
    for e in entries {
        records.push(ParamRecord {
            name: e.name.clone(),
            rows: e.rows,
            cols: e.cols,
            offset,
        });
        offset += e.value.len() as u64;
    }
    let header = Header {
        format_version: FORMAT_VERSION,
        dtype: "f64".into(),
        config: model.config(),
        params: records,
    };
    let header_json = serde_json::to_vec(&header).expect("header serializes");

    let mut out = Vec::with_capacity(16 + header_json.len() + offset as usize * 8);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_json);
    for e in entries {
        for v in &e.value {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn save(path: &Path, model: &Model) -> Result<()> {
    let bytes = to_bytes(model);
    let tmp = path.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Model> {
    let bad = |msg: String| Error::Input(format!("{}: {msg}", origin.display()));
    if bytes.len() < 16 || bytes[..4] != MAGIC {
        return Err(bad("not a checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(bad(format!(
            "format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if bytes.len() < 16 + hlen {
        return Err(bad("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&bytes[16..16 + hlen])
        .map_err(|e| bad(format!("header parse: {e}")))?;
    if header.dtype != "f64" {
        return Err(bad(format!("dtype {}, expected f64", header.dtype)));
    }
    let data = &bytes[16 + hlen..];

    let mut model = Model::empty(header.config)?;
    if header.params.len() != model.params().len() {
        return Err(bad(format!(
            "{} parameters in file, model has {}",
            header.params.len(),
            model.params().len()
        )));
    }
    for rec in &header.params {
        let n = rec.rows * rec.cols;
        let start = rec.offset as usize * 8;
        let end = start + n * 8;
        if end > data.len() {
            return Err(bad(format!("parameter '{}' exceeds data section", rec.name)));
        }
        let vals: Vec<f64> = data[start..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        match model.params().by_name(&rec.name) {
            Some(e) if (e.rows, e.cols) == (rec.rows, rec.cols) => {}
            Some(e) => {
                return Err(bad(format!(
                    "parameter '{}' is {}x{} in file, {}x{} in model",
                    rec.name, rec.rows, rec.cols, e.rows, e.cols
                )))
            }
            None => return Err(bad(format!("unknown parameter '{}'", rec.name))),
        }
        model.params_mut().set_value_by_name(&rec.name, vals)?;
    }
    Ok(model)
}

pub fn load(path: &Path) -> Result<Model> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    f.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes, path)
}
