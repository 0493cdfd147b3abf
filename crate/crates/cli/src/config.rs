//! Strict JSON configuration: every struct rejects unknown keys.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use loewner_core::field::PeriodicGrid;
use loewner_core::loewner::{bump, LoewnerOptions};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Deserializes `text`, reporting the line of the offending key.
pub fn parse<T: DeserializeOwned>(path: &Path, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        // Tagged enums buffer their content, so serde points at the closing brace.
        let line = message
            .strip_prefix("unknown field `")
            .and_then(|rest| rest.split('`').next())
            .and_then(|key| {
                let needle = format!("\"{key}\"");
                text.lines()
                    .take(e.line())
                    .enumerate()
                    .filter(|(_, l)| l.contains(&needle))
                    .last()
                    .map(|(i, _)| i + 1)
            })
            .unwrap_or(e.line());
        CliError::Config {
            path: path.to_path_buf(),
            message: format!("line {line}: {message}"),
        }
    })
}

/// Wraps an error raised after typed parsing, pointing at the first line
/// that mentions `key` when one is named in the message.
pub fn late_error(path: &Path, text: &str, err: impl std::fmt::Display) -> CliError {
    let message = err.to_string();
    let line = message
        .split('`')
        .nth(1)
        .and_then(|key| line_of(text, &format!("\"{key}\"")))
        .unwrap_or(1);
    CliError::Config {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    }
}

pub fn line_of(text: &str, needle: &str) -> Option<usize> {
    text.lines().position(|l| l.contains(needle)).map(|i| i + 1)
}

pub fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: PathBuf::from(path),
        source,
    })
}

/// Periodic profile in `x`.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Const {
        value: f64,
    },
    /// `mean + sum_k cos[k-1] cos(k q x) + sin[k-1] sin(k q x)`, `q = 2 pi / length`.
    Trig {
        #[serde(default)]
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// `base + height bump((x - center) / width)`.
    Bump {
        #[serde(default)]
        base: f64,
        height: f64,
        center: f64,
        width: f64,
    },
}

impl Profile {
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match self {
            Profile::Const { value } => *value,
            Profile::Trig { mean, cos, sin } => {
                let q = 2.0 * PI / length;
                let c: f64 = cos
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * ((k + 1) as f64 * q * x).cos())
                    .sum();
                let s: f64 = sin
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * ((k + 1) as f64 * q * x).sin())
                    .sum();
                mean + c + s
            }
            Profile::Bump {
                base,
                height,
                center,
                width,
            } => base + height * bump((x - center) / width),
        }
    }

    pub fn sample(&self, g: &PeriodicGrid) -> Vec<f64> {
        g.sample(|x| self.eval(x, g.length))
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub n: usize,
    #[serde(default = "two_pi")]
    pub length: f64,
}

fn two_pi() -> f64 {
    2.0 * PI
}

impl GridCfg {
    pub fn grid(&self) -> PeriodicGrid {
        PeriodicGrid::new(self.n, self.length)
    }
}

/// `n` uniform points on `[lo, hi]`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|k| self.lo + k as f64 * h).collect()
    }
}

/// Polynomial in one variable, ascending coefficients.
#[derive(Clone, Debug, Deserialize)]
#[serde(transparent)]
pub struct Poly1(pub Vec<f64>);

impl Poly1 {
    pub fn eval(&self, r: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * r + c)
    }

    pub fn derivative(&self) -> Poly1 {
        Poly1(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoewnerOpts {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub eta: Option<f64>,
    pub eps_swallow: Option<f64>,
    pub delta_tip: Option<f64>,
}

impl LoewnerOpts {
    pub fn options(&self) -> LoewnerOptions {
        let d = LoewnerOptions::default();
        LoewnerOptions {
            rtol: self.rtol.unwrap_or(d.rtol),
            atol: self.atol.unwrap_or(d.atol),
            eta: self.eta.unwrap_or(d.eta),
            eps_swallow: self.eps_swallow.unwrap_or(d.eps_swallow),
            delta_tip: self.delta_tip.unwrap_or(d.delta_tip),
        }
    }
}
