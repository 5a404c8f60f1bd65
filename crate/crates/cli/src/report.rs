use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;

pub const CSV_VERSION: &str = "dtqm-csv v1";

/// One pass/fail comparison against a configured tolerance or expectation.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value < limit,
            detail: format!("{value:e} < {limit:e}"),
        }
    }

    pub fn expect(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// What a subcommand hands back: structured results, checks, and any
/// tabular series to write.
pub struct Outcome {
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Set when a run finished but part of it failed numerically.
    pub numerical_failure: Option<String>,
}

#[derive(Serialize)]
pub struct RunReport<'a> {
    pub artifact: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub config: &'a ExperimentConfig,
    pub wall_time_s: f64,
    pub results: &'a serde_json::Value,
    pub checks: &'a [Check],
    pub pass: bool,
}

/// A named table written as CSV or as a JSON array of row objects.
pub struct Table {
    pub suffix: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Clone, Copy, Debug)]
pub enum Cell {
    Int(usize),
    Float(f64),
    Missing,
}

impl Cell {
    pub fn opt(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Float)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            // shortest representation that round-trips
            Cell::Float(x) => format!("{x:?}"),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(n) => (*n).into(),
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, Into::into),
            Cell::Missing => serde_json::Value::Null,
        }
    }
}

impl Table {
    pub fn to_csv(&self, subcommand: &str) -> String {
        let mut out = format!("# {CSV_VERSION} {subcommand}/{}\n", self.suffix);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn to_json(&self, subcommand: &str) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.json()))
                    .collect();
                obj.into()
            })
            .collect();
        serde_json::json!({
            "format": format!("{CSV_VERSION} {subcommand}/{}", self.suffix),
            "columns": self.columns,
            "rows": rows,
        })
    }
}

pub struct Writer {
    pub directory: PathBuf,
    pub stem: String,
    pub formats: Vec<Format>,
}

impl Writer {
    fn path(&self, suffix: &str, ext: &str) -> PathBuf {
        self.directory.join(format!("{}.{suffix}.{ext}", self.stem))
    }

    fn write(path: &Path, contents: &str) -> Result<(), CliError> {
        fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    /// Writes the report and every table; returns the written paths.
    pub fn emit(&self, subcommand: &str, report: &RunReport, tables: &[Table]) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(&self.directory)
            .map_err(|e| CliError::Io(format!("{}: {e}", self.directory.display())))?;
        let mut written = Vec::new();
        for table in tables {
            for format in &self.formats {
                let (path, body) = match format {
                    Format::Csv => (self.path(table.suffix, "csv"), table.to_csv(subcommand)),
                    Format::Json => (
                        self.path(table.suffix, "json"),
                        pretty(&table.to_json(subcommand))?,
                    ),
                };
                Self::write(&path, &body)?;
                written.push(path);
            }
        }
        let path = self.path("report", "json");
        Self::write(&path, &pretty(report)?)?;
        written.push(path);
        Ok(written)
    }
}

fn pretty<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
