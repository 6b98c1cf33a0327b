//! Output files. Every CSV gets a `.json` sidecar with the provenance block;
//! JSON reports embed it directly.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliResult;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub config: RunConfig,
}

impl Provenance {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            config_hash: config.hash(),
            seed: config.seed,
            version: VERSION.to_string(),
            config: config.clone(),
        }
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("provenance serializes")
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, provenance: &Provenance, body: &T) -> CliResult<()> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, &Document { provenance, body })?;
    Ok(())
}

/// Headed CSV of serializable rows plus `<name>.json` holding the provenance
/// and `meta`.
pub fn write_csv<R: Serialize, M: Serialize>(
    path: &Path,
    rows: &[R],
    provenance: &Provenance,
    meta: &M,
) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    write_json(&sidecar(path), provenance, meta)
}

pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}
