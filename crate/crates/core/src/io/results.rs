//! CSV tables, a JSON summary and a hashed manifest.
//!
//! Floats are written with Rust's shortest round-trip formatting (`.` decimal,
//! no locale), non-finite values as `nan`, `inf`, `-inf`; lines end in `\n`.
//! `manifest.json` lists every other file with its SHA-256.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::IoError;

pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => format_float(*f),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// One CSV file, `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, IoError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let ser = |e: csv::Error| IoError::Serialize(e.to_string());
        w.write_record(&self.header).map_err(ser)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).map_err(ser)?;
        }
        w.into_inner().map_err(|e| IoError::Serialize(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<ManifestEntry, IoError> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|source| IoError::Path { path, source })?;
    Ok(ManifestEntry { file: name.to_string(), bytes: bytes.len() as u64, sha256: hex::encode(Sha256::digest(bytes)) })
}

/// JSON with non-finite floats: serde_json writes them as `null`, so callers
/// flag them separately in the summary.
pub fn to_json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>, IoError> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| IoError::Serialize(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes the tables, `summary.json` and `manifest.json` into `dir`; returns the manifest.
pub fn write_results(tables: &[Table], summary: &serde_json::Value, dir: &Path) -> Result<Manifest, IoError> {
    std::fs::create_dir_all(dir).map_err(|source| IoError::Path { path: dir.to_path_buf(), source })?;
    let mut files = Vec::with_capacity(tables.len() + 1);
    for t in tables {
        files.push(write_file(dir, &t.file_name(), &t.to_csv()?)?);
    }
    files.push(write_file(dir, SUMMARY_FILE, &to_json_bytes(summary)?)?);
    let manifest = Manifest { files };
    write_file(dir, MANIFEST_FILE, &to_json_bytes(&manifest)?)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, IoError> {
    let path: PathBuf = dir.join(MANIFEST_FILE);
    let text = std::fs::read(&path).map_err(|source| IoError::Path { path, source })?;
    serde_json::from_slice(&text).map_err(|e| IoError::Serialize(e.to_string()))
}
