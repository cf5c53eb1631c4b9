//! Model files: a JSON document with a `version` tag and the full model.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DecompositionRow, HeliosModel};
use crate::data::format_timestamp;
use crate::error::{Error, Result};

pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Serialize)]
struct FileRef<'a> {
    version: u32,
    model: &'a HeliosModel,
}

#[derive(Deserialize)]
struct Header {
    version: u32,
}

#[derive(Deserialize)]
struct FileOwned {
    model: HeliosModel,
}

pub fn save_model(m: &HeliosModel, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&FileRef { version: MODEL_FILE_VERSION, model: m })
        .map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<HeliosModel> {
    let text = fs::read_to_string(path)?;
    let header: Header = serde_json::from_str(&text).map_err(|e| Error::Io(format!("malformed model file: {e}")))?;
    if header.version != MODEL_FILE_VERSION {
        return Err(Error::SchemaVersionMismatch { found: header.version, expected: MODEL_FILE_VERSION });
    }
    let file: FileOwned = serde_json::from_str(&text).map_err(|e| Error::Io(format!("malformed model file: {e}")))?;
    let m = file.model;
    m.config.validate()?;
    m.contexts.validate()?;
    m.priors.validate(&m.contexts)?;
    Ok(m)
}

pub const DECOMPOSITION_HEADER: [&str; 5] = ["timestamp", "total", "space", "hot_water", "loss"];

/// One row per predicted step; `total` is the sum of the three components.
pub fn write_decomposition_csv<W: Write>(rows: &[DecompositionRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(DECOMPOSITION_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            format_timestamp(r.timestamp),
            r.total.to_string(),
            r.space.to_string(),
            r.hot_water.to_string(),
            r.loss.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
