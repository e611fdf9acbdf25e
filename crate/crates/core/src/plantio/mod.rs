//! Versioned on-disk formats for external plants and reduced-order models.
//!
//! Both containers are JSON. Matrices are stored row-major with a SHA-256 of
//! their little-endian bytes, and floats are written in shortest round-trip
//! decimal, so loading reproduces every bit.

mod bundle;
mod rom;

use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use bundle::{load_plant, save_plant, ExternalPlantBundle, PlantMetadata, BUNDLE_SCHEMA_VERSION};
pub use rom::{load_rom, save_rom, LoadedRom, RomMetadata, ROM_SCHEMA_VERSION};

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hex SHA-256 of a file's contents.
pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn data_hash(data: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in data {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// A dense matrix as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixBlock {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<f64>,
    pub sha256: String,
}

impl MatrixBlock {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let data: Vec<f64> = m.transpose().iter().copied().collect();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            sha256: data_hash(&data),
            data,
        }
    }

    /// Checks shape, checksum and finiteness; `path` names the field in errors.
    pub fn to_matrix(&self, path: &str) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::schema(
                format!("{path}.data"),
                format!("{} entries for a {}x{} block", self.data.len(), self.rows, self.cols),
            ));
        }
        if data_hash(&self.data) != self.sha256 {
            return Err(Error::schema(format!("{path}.sha256"), "checksum does not match the data"));
        }
        if let Some(k) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::schema(format!("{path}.data[{k}]"), "non-finite entry"));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

fn expect_shape(path: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::schema(
            path,
            format!("expected {rows}x{cols}, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

/// Reads `schema_version` before the rest so newer files fail with a version
/// message rather than a field error.
fn parse_versioned<T: DeserializeOwned>(text: &str, kind: &str, supported: u32) -> Result<T> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::schema("$", format!("not valid JSON: {e}")))?;
    let found = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::schema("schema_version", "missing or not an integer"))?;
    let found = u32::try_from(found).map_err(|_| Error::schema("schema_version", "out of range"))?;
    if found > supported {
        return Err(Error::Version { found, supported });
    }
    match value.get("kind").and_then(serde_json::Value::as_str) {
        Some(k) if k == kind => {}
        other => {
            return Err(Error::schema("kind", format!("expected \"{kind}\", got {other:?}")));
        }
    }
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::schema(path, e.into_inner().to_string())
    })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("containers serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
