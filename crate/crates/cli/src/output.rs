//! Artifact writing: CSV tables, JSON reports, SVG plots and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::svg::{self, Panel};
use crate::CliError;

/// One CSV cell. Floats always print with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Float)
    }

    fn render(&self) -> String {
        match self {
            Cell::Float(v) if v.is_nan() => "NaN".into(),
            Cell::Float(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            // Adding zero folds −0 into +0.
            Cell::Float(v) => format!("{:.16e}", v + 0.0),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(t) => t.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
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

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io_err)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

/// Everything a command produces, before formats are chosen.
pub struct Report {
    pub table: Table,
    pub json: serde_json::Value,
    pub panels: Vec<Panel>,
}

impl Report {
    pub fn new(table: Table, json: impl Serialize, panels: Vec<Panel>) -> Result<Self, CliError> {
        let json = serde_json::to_value(json).map_err(io_err)?;
        Ok(Self { table, json, panels })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub format: &'static str,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub timestamp: String,
    pub config_path: String,
    pub config_sha256: String,
    pub workers: usize,
    pub seed: Option<u64>,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// What a finished run wrote.
#[derive(Debug, Clone)]
pub struct Written {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

pub struct RunInfo<'a> {
    pub command: &'a str,
    pub config_path: &'a Path,
    pub config_bytes: &'a [u8],
    pub workers: usize,
    pub seed: Option<u64>,
}

/// Write one file per requested format, then `manifest.json`.
pub fn write_all(dir: &Path, formats: &[Format], report: &Report, info: &RunInfo) -> Result<Written, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let timestamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
    let mut files = Vec::new();
    let mut artifacts = Vec::new();
    for &f in formats {
        let bytes = match f {
            Format::Csv => report.table.to_csv()?,
            Format::Json => {
                let mut b = serde_json::to_vec_pretty(&report.json).map_err(io_err)?;
                b.push(b'\n');
                b
            }
            Format::Svg => svg::render(&report.panels).into_bytes(),
        };
        let name = format!("{}-{}.{}", info.command, timestamp, f.extension());
        let path = dir.join(&name);
        std::fs::write(&path, &bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        artifacts.push(Artifact {
            format: f.extension(),
            file: name,
            sha256: sha256_hex(&bytes),
        });
        files.push(path);
    }
    let manifest = Manifest {
        tool: "bjpa",
        version: env!("CARGO_PKG_VERSION"),
        command: info.command.to_string(),
        timestamp,
        config_path: info.config_path.display().to_string(),
        config_sha256: sha256_hex(info.config_bytes),
        workers: info.workers,
        seed: info.seed,
        artifacts,
    };
    let path = dir.join("manifest.json");
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(io_err)?;
    bytes.push(b'\n');
    std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(Written { files, manifest: path })
}
