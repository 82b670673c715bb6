//! Config loading and the JSON run manifest written next to every output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::Common;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Reported but not asserted, e.g. a depth with only a bound.
    Warn,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        let status = if passed { Status::Pass } else { Status::Fail };
        Self { name: name.into(), status, detail: detail.into() }
    }

    pub fn warn(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { name: name.into(), status: Status::Warn, detail: detail.into() }
    }
}

pub enum Outcome {
    Passed,
    Failed(Vec<String>),
}

#[derive(Serialize)]
struct Versions {
    pqk: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    seed: u64,
    config: &'a C,
    versions: Versions,
    threads: usize,
    wall_clock_seconds: f64,
    outputs: &'a [String],
    checks: &'a [Check],
    failing: Vec<&'a str>,
}

pub struct RunContext {
    pub command: &'static str,
    pub common: Common,
    started: Instant,
}

impl RunContext {
    pub fn new(command: &'static str, common: Common) -> Self {
        Self { command, common, started: Instant::now() }
    }

    /// Reads the config file, or the default when none was given.
    pub fn load<C: DeserializeOwned + Default>(&self) -> Result<C> {
        self.load_or(C::default())
    }

    pub fn load_or<C: DeserializeOwned>(&self, default: C) -> Result<C> {
        match &self.common.config {
            None => Ok(default),
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
            }
        }
    }

    pub fn seed_or(&self, config_seed: u64) -> u64 {
        self.common.seed.unwrap_or(config_seed)
    }

    pub fn out_path(&self, file: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.common.out).with_context(|| format!("creating {}", self.common.out.display()))?;
        Ok(self.common.out.join(file))
    }

    /// Writes `manifest.json` and turns the check table into an outcome.
    pub fn finish<C: Serialize>(&self, seed: u64, config: &C, outputs: &[String], checks: &[Check]) -> Result<Outcome> {
        let failing: Vec<&str> = checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.name.as_str()).collect();
        let manifest = Manifest {
            command: self.command,
            seed,
            config,
            versions: Versions { pqk: env!("CARGO_PKG_VERSION") },
            threads: rayon::current_num_threads(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs,
            checks,
            failing: failing.clone(),
        };
        write_json(&self.out_path("manifest.json")?, &manifest)?;
        for c in checks {
            println!("{:<5} {} {}", format!("{:?}", c.status).to_uppercase(), c.name, c.detail);
        }
        Ok(if failing.is_empty() { Outcome::Passed } else { Outcome::Failed(failing.iter().map(|s| s.to_string()).collect()) })
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    pqk_core::stats::write_rows(f, rows)?;
    Ok(())
}
