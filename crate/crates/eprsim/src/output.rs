//! CSV tables and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::Config;
use crate::RunError;

/// One column: name and unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
}

pub const fn col(name: &'static str, unit: &'static str) -> Column {
    Column { name, unit }
}

/// A curve ready to be written. The first two columns are always
/// `frequency_hz` and `value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub description: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// `value_unit` names the unit of the `value` column.
    pub fn new(file: impl Into<String>, description: impl Into<String>, value_unit: &'static str, extra: &[Column]) -> Self {
        let mut columns = vec![col("frequency_hz", "Hz"), col("value", value_unit)];
        columns.extend_from_slice(extra);
        Table {
            file: file.into(),
            description: description.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// `#` header lines, the column names, then one row per line. Numbers use
    /// the shortest representation that round-trips.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {}", self.description);
        let units: Vec<String> = self.columns.iter().map(|c| format!("{}[{}]", c.name, c.unit)).collect();
        let _ = writeln!(s, "# units: {}", units.join(" "));
        let names: Vec<&str> = self.columns.iter().map(|c| c.name).collect();
        let _ = writeln!(s, "{}", names.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub description: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub version: String,
    pub config: Config,
    pub threads: usize,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
    /// Scenario-specific scalars such as optimiser results.
    pub summary: serde_json::Value,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes every table into `dir` and returns their manifest entries.
pub fn write_tables(dir: &Path, tables: &[Table]) -> Result<Vec<FileEntry>, RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let mut entries = Vec::with_capacity(tables.len());
    for t in tables {
        let path = dir.join(&t.file);
        fs::write(&path, t.to_csv()).map_err(|e| RunError::io(&path, e))?;
        entries.push(FileEntry {
            path: t.file.clone(),
            description: t.description.clone(),
            rows: t.rows.len(),
        });
    }
    Ok(entries)
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), RunError> {
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(manifest).map_err(|e| RunError::Output(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| RunError::io(&path, e))
}
