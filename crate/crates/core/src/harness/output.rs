//! Artifact emission: CSV tables, JSON documents and the run manifest.
//!
//! Every file is written to a temporary sibling and renamed into place, so a
//! failed run never leaves a truncated artifact behind.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Headered CSV from serializable rows; floats use the shortest round-trip form.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| csv_err(e.into_error().into()))
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// One finished artifact, still in memory.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
    pub rows: usize,
}

impl Artifact {
    pub fn csv<T: Serialize>(name: &str, rows: &[T]) -> Result<Self> {
        Ok(Self {
            name: name.to_string(),
            bytes: csv_bytes(rows)?,
            rows: rows.len(),
        })
    }

    pub fn json<T: Serialize>(name: &str, value: &T) -> Result<Self> {
        Ok(Self {
            name: name.to_string(),
            bytes: json_bytes(value)?,
            rows: 0,
        })
    }

    pub fn text(name: &str, text: String) -> Self {
        Self {
            name: name.to_string(),
            bytes: text.into_bytes(),
            rows: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunFlags {
    pub workers: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub config_path: Option<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: String,
    version: &'static str,
    started_at: u64,
    rows: usize,
    flags: &'a RunFlags,
    artifacts: Vec<&'a str>,
    grid: serde_json::Value,
    config: &'a ExperimentConfig,
}

/// Writes all artifacts, then `manifest.json` last.
pub fn emit(
    dir: &Path,
    cfg: &ExperimentConfig,
    flags: &RunFlags,
    started: SystemTime,
    grid: serde_json::Value,
    artifacts: &[Artifact],
) -> Result<PathBuf> {
    for a in artifacts {
        write_atomic(&dir.join(&a.name), &a.bytes)?;
    }
    let manifest = Manifest {
        config_hash: cfg.hash(),
        version: env!("CARGO_PKG_VERSION"),
        started_at: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        rows: artifacts.iter().map(|a| a.rows).sum(),
        flags,
        artifacts: artifacts.iter().map(|a| a.name.as_str()).collect(),
        grid,
        config: cfg,
    };
    let path = dir.join("manifest.json");
    write_atomic(&path, &json_bytes(&manifest)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        epsilon: f64,
        note: Option<f64>,
        resolved: bool,
    }

    #[test]
    fn csv_layout() {
        let rows = [
            Row {
                epsilon: 0.1,
                note: None,
                resolved: true,
            },
            Row {
                epsilon: 1e-3,
                note: Some(2.5),
                resolved: false,
            },
        ];
        let s = String::from_utf8(csv_bytes(&rows).unwrap()).unwrap();
        assert_eq!(s, "epsilon,note,resolved\n0.1,,true\n0.001,2.5,false\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
