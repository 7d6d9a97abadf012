//! CSV tables, atomic file output and the run manifest.

use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// A CSV table with a header row. Floats use Rust's shortest round-trip
/// formatting, so identical values always give identical bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
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

fn render(cell: Cell) -> String {
    match cell {
        Cell::Num(v) => format!("{v:e}"),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s,
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width must match the header"
        );
        self.rows.push(row.into_iter().map(render).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Writes `contents` to `dir/name` through a temporary file and a rename,
/// so readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, &target).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::from(e)
    })?;
    Ok(target)
}

/// A named acceptance check declared by a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Human-readable acceptance condition.
    pub expected: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, measured: f64, expected: impl Into<String>, pass: bool) -> Self {
        Check {
            name: name.to_string(),
            measured,
            expected: expected.into(),
            pass,
        }
    }

    /// Passes when `measured` lies within a factor `factor` of `target`.
    pub fn within_factor(name: &str, measured: f64, target: f64, factor: f64) -> Self {
        let ratio = measured / target;
        let pass = ratio.is_finite() && ratio > 0.0 && ratio <= factor && ratio >= 1.0 / factor;
        Check::new(
            name,
            measured,
            format!("within factor {factor} of {target:e}"),
            pass,
        )
    }

    /// Passes when |measured/target − 1| ≤ tol.
    pub fn relative(name: &str, measured: f64, target: f64, tol: f64) -> Self {
        let err = (measured / target - 1.0).abs();
        Check::new(
            name,
            measured,
            format!("{target:e} to {tol:e} relative"),
            err <= tol,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub command: String,
    pub preset: Option<String>,
    /// Where the scenario's reference numbers come from.
    pub anchor: Option<String>,
    pub seed: u64,
    /// Parsed configuration, in the same sectioned text form the
    /// `--config` flag accepts.
    pub config: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
}

impl RunManifest {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{} {}: {:e} ({})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.expected
            );
        }
        s
    }
}
