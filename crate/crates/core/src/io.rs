//! Output artifacts: CSV curves, JSON reports and the per-directory run manifest.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

use crate::GllError;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub params: Value,
    pub grid: Value,
    pub tolerances: Value,
    pub residuals: Value,
    /// Excluded from the content hash and from the determinism contract.
    pub wall_time_s: f64,
    pub input_hash: String,
}

/// sha256 of the canonical (sorted-key, compact) JSON encoding.
pub fn content_hash(v: &Value) -> String {
    let canon = serde_json::to_string(v).expect("json values always encode");
    hex::encode(Sha256::digest(canon.as_bytes()))
}

impl RunManifest {
    pub fn new(command: &str, params: Value, grid: Value, tolerances: Value) -> Self {
        let input = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "params": params,
            "grid": grid,
            "tolerances": tolerances,
        });
        RunManifest {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            input_hash: content_hash(&input),
            params,
            grid,
            tolerances,
            residuals: Value::Null,
            wall_time_s: 0.0,
        }
    }

    pub fn read(dir: &Path) -> Result<Self, GllError> {
        let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// A directory that receives one run's files and exactly one manifest.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    /// Creates the directory. Artifacts listed by an earlier manifest in it
    /// are removed so that stale files do not outlive their run.
    pub fn create(root: &Path) -> Result<Self, GllError> {
        fs::create_dir_all(root)?;
        if let Ok(old) = RunManifest::read(root) {
            if let Some(files) = old.grid.get("artifacts").and_then(Value::as_array) {
                for f in files.iter().filter_map(Value::as_str) {
                    if f != MANIFEST_NAME && !f.contains('/') && !f.contains('\\') {
                        let _ = fs::remove_file(root.join(f));
                    }
                }
            }
        }
        Ok(OutputDir { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn target(&mut self, name: &str) -> Result<PathBuf, GllError> {
        if name == MANIFEST_NAME || name.contains('/') || name.contains('\\') {
            return Err(GllError::Io(format!("invalid artifact name {name}")));
        }
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(self.root.join(name))
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), GllError> {
        let path = self.target(name)?;
        write_csv(&path, header, rows)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), GllError> {
        let path = self.target(name)?;
        write_json(&path, value)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), GllError> {
        let path = self.target(name)?;
        fs::write(path, text)?;
        Ok(())
    }

    /// Writes the manifest, listing the artifacts in the order they were written.
    pub fn finish(self, mut manifest: RunManifest) -> Result<PathBuf, GllError> {
        if manifest.grid.is_null() {
            manifest.grid = Value::Object(Default::default());
        }
        if let Value::Object(ref mut m) = manifest.grid {
            m.entry("artifacts").or_insert_with(|| serde_json::json!(self.files));
        }
        write_json(&self.root.join(MANIFEST_NAME), &manifest)?;
        Ok(self.root)
    }
}

/// Shortest round-trip decimal for every value; header row first.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), GllError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(GllError::Io(format!("row has {} fields, header {}", row.len(), header.len())));
        }
        w.write_record(row.iter().map(|x| format!("{x:?}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), GllError> {
    let mut rd = csv::Reader::from_path(path)?;
    let header = rd.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| GllError::Io(format!("{s}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), GllError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
