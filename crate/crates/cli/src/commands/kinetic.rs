//! Loewner map -> distribution -> Vlasov run -> moments -> Benney residual.

use std::f64::consts::PI;
use std::sync::Arc;

use loewner_core::field::PeriodicGrid;
use loewner_core::kinetic::{
    benney_residual, init_from_map, KineticSolver, KineticState, MomentHistory, Shape, VelocityGrid,
};
use loewner_core::loewner::{map_f, DrivingSpec, LoewnerOptions};
use loewner_core::ResidualReport;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use super::moments::{integral_drift, write_history};
use crate::artifacts::Context;
use crate::config::{GridCfg, Profile};
use crate::error::CliResult;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowCfg {
    pub n: usize,
    /// Symmetric window `[-half_width, half_width]`; picked from the decay when absent.
    pub half_width: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ShapeCfg {
    #[default]
    Gaussian,
    /// `1 / cosh(f)^2`, needs real `f`.
    Sech2,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    /// `f(w, x) = f(w, t0(x))`, boundary values of the inverse Loewner map.
    Map { driving: DrivingSpec, t0: Profile },
    /// Map whose Gaussian image is `eta / (width sqrt(pi)) exp(-((w - v) / width)^2)`.
    ColdPlasma {
        eta: Profile,
        v: Profile,
        width: f64,
    },
}

fn one() -> usize {
    1
}

fn three() -> usize {
    3
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveKinetic {
    pub x: GridCfg,
    pub w: WindowCfg,
    pub initial: Initial,
    #[serde(default)]
    pub shape: ShapeCfg,
    pub s_end: f64,
    /// Step; defaults to the smaller of `dx` and the kick-limited step of the initial state.
    pub ds: Option<f64>,
    #[serde(default = "one")]
    pub record_every: usize,
    /// Highest moment recorded; rows `0..order-1` enter the residual.
    #[serde(default = "three")]
    pub order: usize,
    /// Also write the final distribution.
    #[serde(default)]
    pub checkpoint: bool,
}

#[derive(Clone, Debug)]
pub struct KineticVerdict {
    pub benney: ResidualReport,
    pub integrals: Vec<Vec<f64>>,
    pub drift: f64,
    pub mass_drift: f64,
    pub ds: f64,
    pub steps: usize,
    pub history: MomentHistory,
    pub last: KineticState,
}

/// Map samples `f_values[ix][iw]`.
fn map_samples(
    cfg: &EvolveKinetic,
    x: &PeriodicGrid,
    w: &VelocityGrid,
) -> CliResult<Vec<Vec<Complex64>>> {
    match &cfg.initial {
        Initial::ColdPlasma { eta, v, width } => {
            let norm = width * PI.sqrt();
            Ok((0..x.n)
                .map(|ix| {
                    let (e, c) = (eta.eval(x.x(ix), x.length), v.eval(x.x(ix), x.length));
                    w.points()
                        .iter()
                        .map(|wv| {
                            let f2 = ((wv - c) / width).powi(2) - (e / norm).ln();
                            Complex64::new(f2, 0.0).sqrt()
                        })
                        .collect()
                })
                .collect())
        }
        Initial::Map { driving, t0 } => {
            driving.validate()?;
            let opts = LoewnerOptions::default();
            // Boundary values are taken just above the real axis.
            let lift = 1e-10;
            (0..x.n)
                .into_par_iter()
                .map(|ix| {
                    let t = t0.eval(x.x(ix), x.length);
                    w.points()
                        .iter()
                        .map(|wv| Ok(map_f(driving, Complex64::new(*wv, lift), t, &opts)?))
                        .collect::<CliResult<Vec<_>>>()
                })
                .collect()
        }
    }
}

fn shape(cfg: ShapeCfg) -> Shape {
    match cfg {
        ShapeCfg::Gaussian => Shape::Gaussian,
        ShapeCfg::Sech2 => Shape::Custom(Arc::new(|f: f64| 1.0 / f.cosh().powi(2))),
    }
}

fn window(cfg: &EvolveKinetic, x: &PeriodicGrid) -> CliResult<VelocityGrid> {
    if let Some(hw) = cfg.w.half_width {
        if !(hw > 0.0) || cfg.w.n < 4 {
            return Err(loewner_core::Error::Precondition(
                "velocity window needs half_width > 0 and n >= 4".into(),
            )
            .into());
        }
        return Ok(VelocityGrid::symmetric(hw, cfg.w.n));
    }
    // Probe the decay on a wide provisional window.
    let probe = VelocityGrid::symmetric(50.0, 2001);
    let f = map_samples(cfg, x, &probe)?;
    let sh = shape(cfg.shape);
    let phi = move |w: f64, xv: f64| {
        let ix = ((xv / x.dx()).round() as usize).min(x.n - 1);
        let iw = (((w - probe.min) / probe.dw).round().max(0.0) as usize).min(probe.n - 1);
        let z = f[ix][iw];
        match &sh {
            Shape::Gaussian => (-(z * z).re).exp(),
            Shape::Custom(g) => g(z.re),
        }
    };
    Ok(VelocityGrid::auto(&phi, x, cfg.w.n)?)
}

/// Runs the pipeline and returns the verdict without touching the disk.
pub fn kinetic_verify(cfg: &EvolveKinetic) -> CliResult<KineticVerdict> {
    let x = cfg.x.grid();
    let w = window(cfg, &x)?;
    let state = init_from_map(w, x, &map_samples(cfg, &x, &w)?, &shape(cfg.shape))?;
    let solver = KineticSolver::new(x);
    let ds_target = cfg
        .ds
        .unwrap_or_else(|| solver.default_ds(&state).min(x.dx()));
    if !(ds_target > 0.0 && cfg.s_end > 0.0) {
        return Err(loewner_core::Error::Precondition("need ds > 0 and s_end > 0".into()).into());
    }
    // The residual needs three recorded slices.
    let steps = ((cfg.s_end / ds_target).ceil() as usize).max(2 * cfg.record_every.max(1));
    let ds = cfg.s_end / steps as f64;
    let (last, history) = solver.evolve(&state, ds, steps, cfg.record_every, cfg.order)?;
    let res = benney_residual(&history)?;
    let benney = ResidualReport::from_values(
        "benney",
        x.n,
        res.values.iter().flatten().flatten().copied(),
    );
    let (integrals, drift) = integral_drift(&history, 2);
    let m0 = state.mass();
    Ok(KineticVerdict {
        benney,
        integrals,
        drift,
        mass_drift: (last.mass() - m0).abs() / m0.abs().max(1e-300),
        ds,
        steps,
        history,
        last,
    })
}

pub fn evolve_kinetic(cfg: &EvolveKinetic, ctx: &mut Context) -> CliResult<()> {
    let v = kinetic_verify(cfg)?;
    write_history(
        ctx,
        &v.history,
        "kinetic",
        json!({ "ds": v.ds, "steps": v.steps, "record_every": cfg.record_every }),
    )?;
    ctx.out.json(
        "verdict.json",
        &json!({
            "benney": v.benney,
            "integral_drift": v.drift,
            "mass_drift": v.mass_drift,
            "integrals": { "s": v.history.s, "values": v.integrals },
        }),
    )?;
    if cfg.checkpoint {
        let path = ctx.out.path("final_state.csv");
        std::fs::write(&path, checkpoint(&v.last))
            .map_err(|source| crate::error::CliError::Io { path, source })?;
    }
    ctx.check("benney", v.benney.clone())?;
    ctx.check(
        "drift",
        ResidualReport::from_values("conserved_integral_drift", cfg.x.n, [v.drift]),
    )?;
    ctx.check(
        "mass",
        ResidualReport::from_values("mass_drift", cfg.x.n, [v.mass_drift]),
    )
}

/// Checkpoint: a `#`-prefixed grid header followed by rows `phi(w_i, x_j)` per `x_j`.
pub fn checkpoint(state: &KineticState) -> String {
    let mut out = format!(
        "# s={}\n# x_n={},x_length={}\n# w_min={},w_dw={},w_n={}\n",
        state.s, state.x.n, state.x.length, state.w.min, state.w.dw, state.w.n
    );
    for ix in 0..state.x.n {
        let row: Vec<String> = state.column(ix).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
