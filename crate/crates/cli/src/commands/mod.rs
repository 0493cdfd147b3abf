pub mod algebra;
pub mod kinetic;
pub mod loewner;
pub mod moments;
pub mod reduction;

use std::path::Path;

use clap::ValueEnum;

use crate::artifacts::Context;
use crate::config::{late_error, parse};
use crate::error::CliResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    TraceSlit,
    EvolveSeries,
    SplitTime,
    EvolveKinetic,
    EvolveChain,
    InvertSeries,
    Faber,
    CheckGt,
    CheckDkp,
    CheckMdkp,
    BracketCheck,
    VertexCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::TraceSlit => "trace-slit",
            Command::EvolveSeries => "evolve-series",
            Command::SplitTime => "split-time",
            Command::EvolveKinetic => "evolve-kinetic",
            Command::EvolveChain => "evolve-chain",
            Command::InvertSeries => "invert-series",
            Command::Faber => "faber",
            Command::CheckGt => "check-gt",
            Command::CheckDkp => "check-dkp",
            Command::CheckMdkp => "check-mdkp",
            Command::BracketCheck => "bracket-check",
            Command::VertexCheck => "vertex-check",
        }
    }

    /// Default tolerances, overridable with `--tol name=value`.
    pub fn tolerances(self) -> &'static [(&'static str, f64)] {
        match self {
            Command::TraceSlit | Command::SplitTime => &[],
            Command::EvolveSeries => &[("coefficient_flow", 1e-6)],
            Command::EvolveKinetic => &[("benney", 1e-3), ("drift", 1e-4), ("mass", 1e-6)],
            Command::EvolveChain => &[("drift", 1e-4)],
            Command::InvertSeries => &[("round_trip", 1e-12)],
            Command::Faber => &[("faber_dual", 1e-10)],
            Command::CheckGt => &[("gt", 1e-3), ("tsarev", 1e-3), ("v_consistency", 1e-3)],
            Command::CheckDkp => &[
                ("gen_s", 1e-3),
                ("gen_y", 1e-3),
                ("dkp_1", 1e-3),
                ("dkp_2", 1e-3),
                ("zk", 1e-3),
            ],
            Command::CheckMdkp => &[
                ("dist_s", 1e-3),
                ("dist_y", 1e-3),
                ("mdkp_1", 1e-3),
                ("mdkp_2", 1e-3),
            ],
            Command::BracketCheck => &[
                ("km_skew", 1e-10),
                ("hamiltonian", 1e-10),
                ("commutation", 1e-8),
            ],
            Command::VertexCheck => &[("vertex_t1", 1e-3), ("vertex_t2", 1e-3)],
        }
    }
}

/// A validated configuration, ready to run.
#[derive(Debug)]
pub enum Job {
    TraceSlit(loewner::TraceSlit),
    EvolveSeries(loewner::EvolveSeries),
    SplitTime(loewner::SplitTime),
    EvolveKinetic(kinetic::EvolveKinetic),
    EvolveChain(moments::EvolveChain),
    InvertSeries(algebra::InvertSeries),
    Faber(algebra::Faber),
    CheckGt(reduction::CheckGt),
    CheckDkp(reduction::N1Cfg),
    CheckMdkp(reduction::CheckMdkp),
    BracketCheck(moments::BracketCheck),
    VertexCheck(reduction::N1Cfg),
}

/// Parses and validates the config before any output is created.
pub fn prepare(cmd: Command, path: &Path, text: &str) -> CliResult<Job> {
    Ok(match cmd {
        Command::TraceSlit => {
            let c: loewner::TraceSlit = parse(path, text)?;
            c.driving
                .validate()
                .map_err(|e| late_error(path, text, e))?;
            Job::TraceSlit(c)
        }
        Command::EvolveSeries => {
            let c: loewner::EvolveSeries = parse(path, text)?;
            c.driving
                .validate()
                .map_err(|e| late_error(path, text, e))?;
            Job::EvolveSeries(c)
        }
        Command::SplitTime => Job::SplitTime(parse(path, text)?),
        Command::EvolveKinetic => Job::EvolveKinetic(parse(path, text)?),
        Command::EvolveChain => Job::EvolveChain(parse(path, text)?),
        Command::InvertSeries => Job::InvertSeries(parse(path, text)?),
        Command::Faber => Job::Faber(parse(path, text)?),
        Command::CheckGt => {
            let c: reduction::CheckGt = parse(path, text)?;
            loewner_core::reduction::ReductionFixture::from_json(&c.fixture)
                .map_err(|e| late_error(path, text, e))?;
            Job::CheckGt(c)
        }
        Command::CheckDkp => Job::CheckDkp(parse(path, text)?),
        Command::CheckMdkp => Job::CheckMdkp(parse(path, text)?),
        Command::BracketCheck => Job::BracketCheck(parse(path, text)?),
        Command::VertexCheck => Job::VertexCheck(parse(path, text)?),
    })
}

pub fn execute(job: &Job, ctx: &mut Context) -> CliResult<()> {
    match job {
        Job::TraceSlit(c) => loewner::trace_slit(c, ctx),
        Job::EvolveSeries(c) => loewner::evolve_series_cmd(c, ctx),
        Job::SplitTime(c) => loewner::split_time(c, ctx),
        Job::EvolveKinetic(c) => kinetic::evolve_kinetic(c, ctx),
        Job::EvolveChain(c) => moments::evolve_chain_cmd(c, ctx),
        Job::InvertSeries(c) => algebra::invert_series(c, ctx),
        Job::Faber(c) => algebra::faber(c, ctx),
        Job::CheckGt(c) => reduction::check_gt(c, ctx),
        Job::CheckDkp(c) => reduction::check_dkp(c, ctx),
        Job::CheckMdkp(c) => reduction::check_mdkp(c, ctx),
        Job::BracketCheck(c) => moments::bracket_check(c, ctx),
        Job::VertexCheck(c) => reduction::vertex_check(c, ctx),
    }
}
