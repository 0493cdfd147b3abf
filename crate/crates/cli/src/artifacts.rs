use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use loewner_core::ResidualReport;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

/// Output directory `<out>/<command>-<millis>/`; everything inside is a
/// pure function of the config and seed.
#[derive(Debug)]
pub struct Artifacts {
    pub dir: PathBuf,
    gnuplot: bool,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Artifacts {
    pub fn create(out: &Path, command: &str, gnuplot: bool) -> CliResult<Self> {
        std::fs::create_dir_all(out).map_err(io(out))?;
        let mut millis = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        loop {
            let dir = out.join(format!("{command}-{millis}"));
            match std::fs::create_dir(&dir) {
                Ok(()) => return Ok(Artifacts { dir, gnuplot }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => millis += 1,
                Err(e) => return Err(io(&dir)(e)),
            }
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json(&self, name: &str, value: &Value) -> CliResult<PathBuf> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(io(&path))?;
        Ok(path)
    }

    pub fn csv<I>(&self, name: &str, header: &[&str], rows: I) -> CliResult<PathBuf>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush().map_err(io(&path))?;
        Ok(path)
    }

    /// Companion plot script, written only under `--emit-gnuplot`.
    pub fn gnuplot(&self, name: &str, script: &str) -> CliResult<()> {
        if !self.gnuplot {
            return Ok(());
        }
        let path = self.path(name);
        std::fs::write(&path, script).map_err(io(&path))
    }
}

#[derive(Clone, Debug)]
pub struct CheckRecord {
    pub name: String,
    pub tol: f64,
    pub report: ResidualReport,
    pub path: PathBuf,
}

impl CheckRecord {
    pub fn passed(&self) -> bool {
        self.report.passes(self.tol)
    }
}

/// Everything a command may touch.
pub struct Context {
    pub seed: u64,
    pub tols: BTreeMap<String, f64>,
    pub out: Artifacts,
    pub checks: Vec<CheckRecord>,
}

impl Context {
    /// Writes `<name>.json` and compares its max against tolerance `name`.
    pub fn check(&mut self, name: &str, report: ResidualReport) -> CliResult<()> {
        let tol = *self
            .tols
            .get(name)
            .unwrap_or_else(|| panic!("tolerance `{name}` has no default"));
        let path = self
            .out
            .json(&format!("{name}.json"), &serde_json::to_value(&report)?)?;
        self.checks.push(CheckRecord {
            name: name.into(),
            tol,
            report,
            path,
        });
        Ok(())
    }

    pub fn summary(&self, command: &str) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "max": c.report.max,
                    "tol": c.tol,
                    "pass": c.passed(),
                })
            })
            .collect();
        json!({
            "command": command,
            "seed": self.seed,
            "tolerances": self.tols,
            "checks": checks,
            "pass": self.checks.iter().all(CheckRecord::passed),
        })
    }
}
