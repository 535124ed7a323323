//! CSV tables and JSON reports on disk.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::report::Report;

/// A numeric table with `#`-prefixed metadata lines and an optional header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub metadata: Vec<String>,
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn with_header(header: &[&str]) -> Self {
        Self { header: Some(header.iter().map(|s| s.to_string()).collect()), ..Self::default() }
    }
}

/// A table together with its file name inside the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub table: CsvTable,
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.into(), source }
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        // shortest representation that round-trips
        format!("{v:?}")
    }
}

pub fn emit_csv(table: &CsvTable, path: &Path) -> Result<()> {
    let mut file = File::create(path).map_err(io_error(path))?;
    for line in &table.metadata {
        writeln!(file, "# {line}").map_err(io_error(path))?;
    }
    let mut writer = csv::Writer::from_writer(file);
    if let Some(header) = &table.header {
        writer.write_record(header)?;
    }
    for row in &table.rows {
        writer.write_record(row.iter().map(|v| format_value(*v)))?;
    }
    writer.flush().map_err(io_error(path))?;
    Ok(())
}

pub fn emit_report(report: &Report, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_error(path))?;
    serde_json::to_writer_pretty(file, report)?;
    Ok(())
}

/// Writes all tables and `report.json` into `dir`, recording file names in the report.
pub fn write_outputs(report: &mut Report, files: &[OutputFile], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    for f in files {
        emit_csv(&f.table, &dir.join(&f.name))?;
        report.files.push(f.name.clone());
    }
    report.files.push("report.json".into());
    emit_report(report, &dir.join("report.json"))
}
