//! Experimental lower bounds on the Diósi–Penrose regularization radius R₀.
//!
//! The built-in table is plain data. A CSV file with rows `name,r0_lower_m,note`
//! can add experiments or replace entries of the same name.

use crate::error::{Error, Result};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentBound {
    pub name: String,
    /// Smallest R₀ (metres) compatible with the experiment.
    pub r0_lower: f64,
    pub note: String,
}

impl ExperimentBound {
    pub fn new(name: impl Into<String>, r0_lower: f64, note: impl Into<String>) -> Result<Self> {
        if !(r0_lower.is_finite() && r0_lower > 0.0) {
            return Err(Error::domain(
                "r0_lower_m",
                format!("bound must be positive, got {r0_lower}"),
            ));
        }
        Ok(ExperimentBound {
            name: name.into(),
            r0_lower,
            note: note.into(),
        })
    }
}

const BUILTIN: [(&str, f64, &str); 5] = [
    (
        "gravitational-wave detectors",
        4e-14,
        "centre-of-mass diffusion of test masses",
    ),
    ("neutron stars", 1e-13, "power radiated by neutron stars"),
    (
        "germanium",
        0.54e-10,
        "spontaneous photon emission in germanium detectors",
    ),
    ("neptune", 3.7e-12, "power radiated by Neptune"),
    (
        "cryostat",
        4.6e-12,
        "residual heat leak in ultralow-temperature cryostats",
    ),
];

pub fn builtin_bounds() -> Vec<ExperimentBound> {
    BUILTIN
        .iter()
        .map(|&(name, r0, note)| ExperimentBound {
            name: name.to_string(),
            r0_lower: r0,
            note: note.to_string(),
        })
        .collect()
}

/// Parses `name,r0_lower_m,note` rows. A header row whose second field is
/// not a number is skipped, as are blank lines and `#` comments. The note
/// may itself contain commas.
pub fn parse_bounds_csv(text: &str) -> Result<Vec<ExperimentBound>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(3, ',').map(str::trim);
        let name = fields.next().unwrap_or_default();
        let value = fields.next().unwrap_or_default();
        let note = fields.next().unwrap_or_default();
        let r0: f64 = match value.parse() {
            Ok(v) => v,
            Err(_) if lineno == 0 && out.is_empty() => continue,
            Err(_) => {
                return Err(Error::Config(format!(
                    "bounds csv line {}: `{value}` is not a number",
                    lineno + 1
                )))
            }
        };
        if name.is_empty() {
            return Err(Error::Config(format!(
                "bounds csv line {}: empty name",
                lineno + 1
            )));
        }
        out.push(ExperimentBound::new(name, r0, note)?);
    }
    Ok(out)
}

/// The built-in table with `overrides` merged in: entries whose name matches
/// (case-insensitively) replace the built-in value, the rest are appended.
pub fn merged_bounds(overrides: &[ExperimentBound]) -> Vec<ExperimentBound> {
    let mut table = builtin_bounds();
    for o in overrides {
        match table
            .iter_mut()
            .find(|b| b.name.eq_ignore_ascii_case(&o.name))
        {
            Some(b) => *b = o.clone(),
            None => table.push(o.clone()),
        }
    }
    table
}

pub fn load_bounds(path: &Path) -> Result<Vec<ExperimentBound>> {
    let text = std::fs::read_to_string(path)?;
    Ok(merged_bounds(&parse_bounds_csv(&text)?))
}

/// Every bound in `table` whose lower limit exceeds `r0`.
pub fn r0_excluded_by(table: &[ExperimentBound], r0: f64) -> Result<Vec<ExperimentBound>> {
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(Error::domain("R0", format!("must be positive, got {r0}")));
    }
    Ok(table.iter().filter(|b| b.r0_lower > r0).cloned().collect())
}

pub fn r0_excluded(r0: f64) -> Result<Vec<ExperimentBound>> {
    r0_excluded_by(&builtin_bounds(), r0)
}

pub fn strongest_bound(table: &[ExperimentBound]) -> Option<&ExperimentBound> {
    table
        .iter()
        .max_by(|a, b| a.r0_lower.total_cmp(&b.r0_lower))
}
