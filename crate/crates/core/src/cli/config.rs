//! Sectioned `key = value` configuration.
//!
//! ```text
//! # comment
//! [model]
//! tag = dp
//! [density]
//! kind = sphere
//! mass = 1e-12
//! radius = 5e-6
//! ```
//!
//! Every section and key must appear in [`SCHEMA`]; anything else is
//! rejected with its line number.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

/// Accepted keys per section.
pub const SCHEMA: &[(&str, &[&str])] = &[
    ("run", &["preset", "seed", "label"]),
    ("model", &["tag"]),
    ("density", &["kind", "mass", "radius", "r0", "density"]),
    ("superposition", &["separation", "displacements", "weights"]),
    (
        "kernel",
        &[
            "lambda_c",
            "xi",
            "r_c",
            "gamma",
            "gamma_scale",
            "table",
            "r_max",
            "tau",
            "points",
        ],
    ),
    (
        "solver",
        &[
            "dt",
            "t_end",
            "ensemble",
            "record_stride",
            "points",
            "trajectories",
        ],
    ),
    (
        "ktm",
        &["hbar", "masses", "omega", "coupling", "mean", "cutoff"],
    ),
    (
        "sn",
        &[
            "mode",
            "hbar",
            "mass",
            "g",
            "softening",
            "n",
            "extent",
            "sigma",
            "separation",
            "attraction",
        ],
    ),
];

/// Raw parsed configuration: section → key → value, in sorted order so
/// that the echo is byte-stable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

fn allowed(section: &str) -> Option<&'static [&'static str]> {
    SCHEMA
        .iter()
        .find(|(s, _)| *s == section)
        .map(|(_, keys)| *keys)
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RawConfig::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        Error::Config(format!("line {lineno}: unterminated section header"))
                    })?
                    .trim();
                if allowed(name).is_none() {
                    return Err(Error::Config(format!(
                        "line {lineno}: unknown section [{name}]"
                    )));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {lineno}: expected `key = value`"
                )));
            };
            let sec = section
                .as_deref()
                .ok_or_else(|| Error::Config(format!("line {lineno}: key outside any section")))?;
            cfg.set(sec, key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {lineno}: {}", strip_prefix(&e))))?;
        }
        Ok(cfg)
    }

    /// Sets a key after checking it against the schema. Later values win.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let keys = allowed(section)
            .ok_or_else(|| Error::Config(format!("unknown section [{section}]")))?;
        if !keys.contains(&key) {
            return Err(Error::Config(format!(
                "unknown key `{key}` in [{section}] (accepted: {})",
                keys.join(", ")
            )));
        }
        if value.is_empty() {
            return Err(Error::Config(format!("[{section}] {key}: empty value")));
        }
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Overlays `other` onto `self`, key by key.
    pub fn merge(&mut self, other: &RawConfig) {
        for (s, kv) in &other.sections {
            let dst = self.sections.entry(s.clone()).or_default();
            for (k, v) in kv {
                dst.insert(k.clone(), v.clone());
            }
        }
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                Error::Config(format!(
                    "[{section}] {key} = `{v}` is not a valid {}",
                    short_type::<T>()
                ))
            }),
        }
    }

    pub fn get_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T> {
        self.get(section, key)?
            .ok_or_else(|| Error::Config(format!("missing required key [{section}] {key}")))
    }

    /// Comma-separated list of numbers.
    pub fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.raw(section, key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::Config(format!("[{section}] {key}: `{}` is not a number", s.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Fixed-length list.
    pub fn array<const N: usize>(&self, section: &str, key: &str) -> Result<Option<[f64; N]>> {
        match self.list(section, key)? {
            None => Ok(None),
            Some(v) => <[f64; N]>::try_from(v.as_slice()).map(Some).map_err(|_| {
                Error::Config(format!(
                    "[{section}] {key}: expected {N} comma-separated numbers, got {}",
                    v.len()
                ))
            }),
        }
    }

    /// Semicolon-separated 3-vectors, `x,y,z; x,y,z; ...`.
    pub fn vectors(&self, section: &str, key: &str) -> Result<Option<Vec<[f64; 3]>>> {
        let Some(v) = self.raw(section, key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for part in v.split(';') {
            let nums: Vec<f64> = part
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| {
                    Error::Config(format!(
                        "[{section}] {key}: `{}` is not a vector",
                        part.trim()
                    ))
                })?;
            let arr = <[f64; 3]>::try_from(nums.as_slice()).map_err(|_| {
                Error::Config(format!(
                    "[{section}] {key}: `{}` needs three components",
                    part.trim()
                ))
            })?;
            out.push(arr);
        }
        Ok(Some(out))
    }

    /// Canonical text form, parseable by [`RawConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (sec, kv) in &self.sections {
            let _ = writeln!(s, "[{sec}]");
            for (k, v) in kv {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }
}

fn short_type<T>() -> &'static str {
    let name = std::any::type_name::<T>();
    match name {
        "f64" => "number",
        "bool" => "boolean (true/false)",
        "usize" | "u64" => "nonnegative integer",
        _ => name.rsplit("::").next().unwrap_or(name),
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}
