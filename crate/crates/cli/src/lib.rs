//! Command-line orchestration for the `loewner` binary.
//!
//! `loewner <command> --config <file> --out <dir> [--seed N] [--tol name=value ...] [--emit-gnuplot]`
//!
//! Exit status: 0 on success, 2 when a residual exceeds its tolerance, 1 on any error.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use artifacts::{Artifacts, Context};
use commands::Command;
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "loewner",
    version,
    about = "Loewner, Benney and reduction pipelines"
)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance override `name=value`; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
    #[arg(long)]
    pub emit_gnuplot: bool,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BREACH: i32 = 2;

/// What a finished run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    /// Report paths whose residual exceeded the tolerance.
    pub breaches: Vec<PathBuf>,
}

fn tolerances(cmd: Command, overrides: &[String]) -> CliResult<BTreeMap<String, f64>> {
    let mut tols: BTreeMap<String, f64> = cmd
        .tolerances()
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    for raw in overrides {
        let (name, value) = raw
            .split_once('=')
            .ok_or_else(|| CliError::TolSyntax(raw.clone()))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::TolSyntax(raw.clone()))?;
        if !(value > 0.0) {
            return Err(CliError::TolSyntax(raw.clone()));
        }
        match tols.get_mut(name.trim()) {
            Some(slot) => *slot = value,
            None => {
                return Err(CliError::UnknownTol {
                    name: name.trim().into(),
                    command: cmd.name().into(),
                    known: cmd
                        .tolerances()
                        .iter()
                        .map(|(k, _)| *k)
                        .collect::<Vec<_>>()
                        .join(", "),
                })
            }
        }
    }
    Ok(tols)
}

/// Caps the global rayon pool from `BL_THREADS`; only the first call has an effect.
pub fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("BL_THREADS") else {
        return Ok(());
    };
    let n: usize =
        raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            CliError::Threads(format!("expected a positive integer, got `{raw}`"))
        })?;
    // A pool built earlier in this process keeps its size.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

pub fn run(args: &Args) -> CliResult<RunOutcome> {
    init_threads()?;
    let tols = tolerances(args.command, &args.tol)?;
    let text = config::read(&args.config)?;
    let job = commands::prepare(args.command, &args.config, &text)?;
    let mut ctx = Context {
        seed: args.seed,
        tols,
        out: Artifacts::create(&args.out, args.command.name(), args.emit_gnuplot)?,
        checks: Vec::new(),
    };
    commands::execute(&job, &mut ctx)?;
    ctx.out
        .json("run.json", &ctx.summary(args.command.name()))?;
    Ok(RunOutcome {
        dir: ctx.out.dir.clone(),
        breaches: ctx
            .checks
            .iter()
            .filter(|c| !c.passed())
            .map(|c| c.path.clone())
            .collect(),
    })
}

/// Parses `argv`, runs, reports, and returns the exit status.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&args) {
        Ok(out) if out.breaches.is_empty() => {
            println!("{}", out.dir.display());
            EXIT_OK
        }
        Ok(out) => {
            println!("{}", out.dir.display());
            for p in &out.breaches {
                eprintln!("tolerance exceeded: {}", p.display());
            }
            EXIT_BREACH
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
