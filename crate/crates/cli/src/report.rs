use std::fs;
use std::io::Write;
use std::path::Path;

use collapse_lab::CoherenceReport;
use serde::{Deserialize, Serialize};

use crate::config::{OutputFormat, ScenarioConfig};
use crate::error::{CliError, Result};

/// A named numeric table. Every row has one entry per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(name: &str, columns: Vec<String>) -> Self {
        Self {
            name: name.to_string(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(
            row.len(),
            self.columns.len(),
            "row width in table {}",
            self.name
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: ScenarioConfig,
    pub tables: Vec<Table>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence: Option<CoherenceReport>,
    pub wall_time_seconds: f64,
    pub version: String,
    pub seed: u64,
}

impl RunReport {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// JSON document with the wall time zeroed, for run-to-run comparison.
    pub fn deterministic_json(&self) -> String {
        let mut copy = self.clone();
        copy.wall_time_seconds = 0.0;
        to_json(&copy)
    }
}

pub fn to_json(report: &RunReport) -> String {
    let mut text =
        serde_json::to_string_pretty(report).expect("reports contain only finite numbers");
    text.push('\n');
    text
}

/// 17 significant digits, enough to round-trip any `f64`.
fn format_cell(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(table: &Table, out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let failed = |e: csv::Error| CliError::Output(format!("table {}: {e}", table.name));
    writer.write_record(&table.columns).map_err(failed)?;
    for row in &table.rows {
        writer
            .write_record(row.iter().map(|&v| format_cell(v)))
            .map_err(failed)?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Output(format!("table {}: {e}", table.name)))
}

/// Writes the report. JSON goes to a single file; CSV writes one
/// `<table>.csv` per table into the directory `path`. Without a path the
/// output goes to stdout.
pub fn emit(report: &RunReport, format: OutputFormat, path: Option<&Path>) -> Result<()> {
    match (format, path) {
        (OutputFormat::Json, Some(path)) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(CliError::io(parent))?;
            }
            fs::write(path, to_json(report)).map_err(CliError::io(path))
        }
        (OutputFormat::Json, None) => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(to_json(report).as_bytes())
                .map_err(CliError::io("<stdout>"))
        }
        (OutputFormat::Csv, Some(dir)) => {
            fs::create_dir_all(dir).map_err(CliError::io(dir))?;
            for table in &report.tables {
                let file = dir.join(format!("{}.csv", table.name));
                let handle = fs::File::create(&file).map_err(CliError::io(&file))?;
                write_csv(table, handle)?;
            }
            Ok(())
        }
        (OutputFormat::Csv, None) => {
            let mut stdout = std::io::stdout().lock();
            for table in &report.tables {
                writeln!(stdout, "# {}", table.name).map_err(CliError::io("<stdout>"))?;
                write_csv(table, &mut stdout)?;
                writeln!(stdout).map_err(CliError::io("<stdout>"))?;
            }
            Ok(())
        }
    }
}
