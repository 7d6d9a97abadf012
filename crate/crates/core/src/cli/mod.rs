//! Command-line scenario runner.
//!
//! Each invocation parses and validates its configuration, computes every
//! output in memory, then writes the files and a `manifest.json` into the
//! output directory. Exit codes: 0 success, 1 invalid input, 2 numerical
//! failure, 3 a declared acceptance check failed.

pub mod commands;
pub mod config;
pub mod output;
pub mod scenario;

use crate::error::Error;
use clap::{Parser, Subcommand};
use config::RawConfig;
use output::{write_atomic, RunManifest};
use scenario::{find_preset, ScenarioConfig, PRESETS};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_ACCEPTANCE: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "qgrav",
    version,
    about = "Gravity-related collapse and decoherence models"
)]
pub struct Cli {
    /// Master seed for every stochastic engine (overrides `[run] seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for CSV, JSON and text outputs.
    #[arg(long, global = true, default_value = "qgrav-out")]
    pub out_dir: PathBuf,
    /// Sectioned key=value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for ensembles; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Extra `section.key=value` settings applied after the config file.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decoherence and collapse rates for a superposition.
    Rates,
    /// Tabulate a noise kernel.
    Kernel,
    /// Master-equation time series.
    Evolve,
    /// Stochastic trajectory ensembles.
    Sde,
    /// Schrödinger–Newton ground state, free evolution or split packet.
    Sn,
    /// Experimental bounds on the DP radius R0, optionally tested against R0.
    Bounds {
        /// Candidate R0 in metres.
        r0: Option<f64>,
        /// CSV with rows name,r0_lower_m,note merged into the table.
        #[arg(long = "override")]
        override_csv: Option<PathBuf>,
    },
    /// Run a catalogued preset, or the config's model without one.
    Scenario {
        preset: Option<String>,
        /// List the presets and exit.
        #[arg(long)]
        list: bool,
    },
}

fn load_config(cli: &Cli, preset: Option<&str>) -> Result<RawConfig, Error> {
    let mut raw = RawConfig::default();
    let user = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    let preset = preset.or(user.raw("run", "preset"));
    if let Some(name) = preset {
        let p = find_preset(name)?;
        raw = RawConfig::parse(p.config)?;
        raw.set("run", "preset", name)?;
    }
    raw.merge(&user);
    for o in &cli.overrides {
        let (path, value) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set `{o}`: expected section.key=value")))?;
        let (section, key) = path
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("--set `{o}`: expected section.key=value")))?;
        raw.set(section.trim(), key.trim(), value.trim())?;
    }
    Ok(raw)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Rates => "rates",
        Command::Kernel => "kernel",
        Command::Evolve => "evolve",
        Command::Sde => "sde",
        Command::Sn => "sn",
        Command::Bounds { .. } => "bounds",
        Command::Scenario { .. } => "scenario",
    }
}

/// Result of a run, before the process exits.
#[derive(Debug)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub written: Vec<PathBuf>,
}

pub fn execute(cli: &Cli) -> Result<RunReport, Error> {
    let start = Instant::now();
    let preset_name = match &cli.command {
        Command::Scenario { preset, .. } => preset.clone(),
        _ => None,
    };
    let mut raw = load_config(cli, preset_name.as_deref())?;
    let seed = match cli.seed {
        Some(s) => s,
        None => raw.get_or("run", "seed", 0u64)?,
    };
    raw.set("run", "seed", &seed.to_string())?;
    let preset = raw.raw("run", "preset").map(str::to_string);
    let cfg = ScenarioConfig::new(raw, seed);
    let work = || match &cli.command {
        Command::Rates => commands::rates(&cfg),
        Command::Kernel => commands::kernel(&cfg),
        Command::Evolve => commands::evolve(&cfg),
        Command::Sde => commands::sde(&cfg),
        Command::Sn => commands::sn(&cfg),
        Command::Bounds { r0, override_csv } => {
            commands::bounds(*r0, override_csv.as_deref()).map(|(o, _)| o)
        }
        Command::Scenario { .. } => match &preset {
            Some(p) => commands::preset(p, &cfg),
            None => commands::default_scenario(&cfg),
        },
    };
    let outcome = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let anchor = preset
        .as_deref()
        .and_then(|p| find_preset(p).ok())
        .map(|p| p.anchor.to_string());
    let mut written = Vec::new();
    let dir: &Path = &cli.out_dir;
    for (name, body) in &outcome.files {
        written.push(write_atomic(dir, name, body.as_bytes())?);
    }
    let config_text = cfg.raw.to_text();
    written.push(write_atomic(dir, "config.txt", config_text.as_bytes())?);
    let mut outputs: Vec<String> = outcome.files.iter().map(|(n, _)| n.clone()).collect();
    outputs.push("config.txt".into());
    let manifest = RunManifest {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command_name(&cli.command).to_string(),
        preset,
        anchor,
        seed,
        config: config_text,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs,
        checks: outcome.checks,
        results: serde_json::Value::Object(outcome.results),
    };
    written.push(write_atomic(
        dir,
        "manifest.json",
        manifest.to_json().as_bytes(),
    )?);
    Ok(RunReport { manifest, written })
}

pub fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_NUMERICAL
    }
}

/// Parses `args`, runs, prints a summary and returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    if let Command::Scenario { list: true, .. } = cli.command {
        for p in PRESETS {
            println!("{:<20} {}", p.name, p.summary);
        }
        return EXIT_OK;
    }
    match execute(&cli) {
        Ok(report) => {
            print!("{}", report.manifest.summary());
            if let Command::Bounds { .. } = cli.command {
                if let Some(path) = report.written.first() {
                    if let Ok(text) = std::fs::read_to_string(path) {
                        print!("{text}");
                    }
                }
            }
            println!("outputs written to {}", cli.out_dir.display());
            if report.manifest.all_pass() {
                EXIT_OK
            } else {
                EXIT_ACCEPTANCE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
