use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{file_sha256, parse_versioned, read_text, write_json, MatrixBlock};
use crate::error::{Error, Result};
use crate::plant3dof::PolynomialNonlinearity;
use crate::romgen::{ModeInfo, ReducedOrderModel};

pub const ROM_SCHEMA_VERSION: u32 = 1;
const KIND: &str = "rom";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RomMetadata {
    pub name: String,
    /// Parameter file the full-order model was assembled from, if any.
    #[serde(default)]
    pub source_path: Option<String>,
    /// SHA-256 of that file when the ROM was built.
    #[serde(default)]
    pub source_hash: Option<String>,
    pub generator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RomFile {
    schema_version: u32,
    kind: String,
    metadata: RomMetadata,
    a: MatrixBlock,
    b_c: MatrixBlock,
    b_g: MatrixBlock,
    c_out: MatrixBlock,
    phi: MatrixBlock,
    psi: MatrixBlock,
    modes: Vec<ModeInfo>,
    nonlinearity: PolynomialNonlinearity,
    output_labels: Vec<String>,
    output_is_angle: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct LoadedRom {
    pub rom: ReducedOrderModel,
    pub metadata: RomMetadata,
    /// `Some(true)` when the referenced parameter file has changed since the
    /// ROM was built; `None` when there is nothing to compare against.
    pub stale: Option<bool>,
}

/// Writes `rom`; `source` is the parameter file it was built from, hashed now.
pub fn save_rom(rom: &ReducedOrderModel, name: &str, source: Option<&Path>, path: impl AsRef<Path>) -> Result<()> {
    let source_hash = match source {
        Some(p) => Some(file_sha256(p)?),
        None => rom.source_hash.clone(),
    };
    let file = RomFile {
        schema_version: ROM_SCHEMA_VERSION,
        kind: KIND.into(),
        metadata: RomMetadata {
            name: name.into(),
            source_path: source.map(|p| p.display().to_string()),
            source_hash,
            generator: format!("mrac-gla {}", env!("CARGO_PKG_VERSION")),
        },
        a: MatrixBlock::from_matrix(&rom.a),
        b_c: MatrixBlock::from_matrix(&rom.b_c),
        b_g: MatrixBlock::from_matrix(&rom.b_g),
        c_out: MatrixBlock::from_matrix(&rom.c_out),
        phi: MatrixBlock::from_matrix(&rom.phi),
        psi: MatrixBlock::from_matrix(&rom.psi),
        modes: rom.modes.clone(),
        nonlinearity: rom.nonlinearity.clone(),
        output_labels: rom.output_labels.clone(),
        output_is_angle: rom.output_is_angle.clone(),
    };
    write_json(path.as_ref(), &file)
}

/// Reads a ROM written by [`save_rom`]. Any invalid block fails the whole
/// load. A changed source parameter file only warns.
pub fn load_rom(path: impl AsRef<Path>) -> Result<LoadedRom> {
    let path = path.as_ref();
    let f: RomFile = parse_versioned(&read_text(path)?, KIND, ROM_SCHEMA_VERSION)?;
    let rom = ReducedOrderModel::from_parts(
        f.a.to_matrix("a")?,
        f.b_c.to_matrix("b_c")?,
        f.b_g.to_matrix("b_g")?,
        f.c_out.to_matrix("c_out")?,
        f.phi.to_matrix("phi")?,
        f.psi.to_matrix("psi")?,
        f.modes,
        f.nonlinearity,
        f.output_labels,
        f.output_is_angle,
        f.metadata.source_hash.clone(),
    )
    .map_err(|e| match e {
        Error::Dimension(msg) => Error::schema("$", msg),
        other => other,
    })?;
    let stale = match (&f.metadata.source_path, &f.metadata.source_hash) {
        (Some(src), Some(hash)) => {
            let src = resolve(path, src);
            match file_sha256(&src) {
                Ok(now) if &now == hash => Some(false),
                Ok(_) => {
                    log::warn!("ROM {} is stale: {} changed since it was built", path.display(), src.display());
                    Some(true)
                }
                Err(e) => {
                    log::warn!("cannot check ROM source {}: {e}", src.display());
                    None
                }
            }
        }
        _ => None,
    };
    Ok(LoadedRom {
        rom,
        metadata: f.metadata,
        stale,
    })
}

/// Relative source paths are taken relative to the ROM file.
fn resolve(rom_path: &Path, src: &str) -> PathBuf {
    let p = PathBuf::from(src);
    if p.is_absolute() || p.exists() {
        p
    } else {
        rom_path.parent().map_or(p.clone(), |d| d.join(&p))
    }
}
