//! Report and table emission. Reports are pure functions of config and
//! seed; wall-clock timing goes to a separate file.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use radpoisson_core::verify::Check;
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct Skipped {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub pass: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Skipped>,
    pub results: Value,
}

impl Report {
    pub fn new(command: &'static str, config: &ExperimentConfig, checks: Vec<Check>, skipped: Vec<Skipped>, results: Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            seed: config.numerics.seed,
            config: config.clone(),
            pass: checks.iter().all(|c| c.pass),
            checks,
            skipped,
            results,
        }
    }

    pub fn write(&self, out: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("report serialises");
        text.push('\n');
        write_file(&out.join(format!("report.{}.json", self.command)), &text)
    }
}

#[derive(Debug, Serialize)]
struct Timing<'a> {
    command: &'a str,
    seconds: f64,
}

pub fn write_timing(out: &Path, command: &str, seconds: f64) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&Timing { command, seconds }).expect("timing serialises");
    write_file(&out.join(format!("timing.{command}.json")), &(text + "\n"))
}

/// One CSV cell. Floats use 17 significant digits.
pub enum Cell {
    F(f64),
    I(i64),
    B(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}

pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            match cell {
                Cell::F(v) if v.is_finite() => write!(s, "{v:.16e}").unwrap(),
                Cell::F(v) if v.is_nan() => s.push_str("nan"),
                Cell::F(v) => s.push_str(if *v > 0.0 { "inf" } else { "-inf" }),
                Cell::I(v) => write!(s, "{v}").unwrap(),
                Cell::B(v) => write!(s, "{v}").unwrap(),
                Cell::Empty => {}
            }
        }
        s.push('\n');
    }
    s
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}
