use loewner_core::loewner::{
    coefficient_flow_check, evolve_series, solve_ode_point, time_splitting_solve, trace_hull,
    DrivingSpec, TimeFunction,
};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::json;

use crate::artifacts::Context;
use crate::config::{Axis, LoewnerOpts, Profile};
use crate::error::CliResult;

fn hundred() -> usize {
    100
}

fn ten() -> usize {
    10
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSlit {
    pub driving: DrivingSpec,
    #[serde(default = "hundred")]
    pub samples: usize,
    /// Extra starting points `[re, im]` followed forward to `t_end`.
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    #[serde(default)]
    pub options: LoewnerOpts,
}

fn time_grid(t_end: f64, samples: usize) -> Vec<f64> {
    let n = samples.max(1);
    (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

const TRAJECTORY_PLOT: &str =
    "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'Re'\nset ylabel 'Im'\n";

pub fn trace_slit(cfg: &TraceSlit, ctx: &mut Context) -> CliResult<()> {
    cfg.driving.validate()?;
    let opts = cfg.options.options();
    let hull = trace_hull(
        &cfg.driving,
        &time_grid(cfg.driving.t_end, cfg.samples),
        &opts,
    )?;
    let rows = hull
        .times
        .iter()
        .zip(&hull.tips)
        .map(|(t, z)| vec![*t, z.re, z.im]);
    ctx.out.csv("hull.csv", &["t", "re", "im"], rows)?;
    let tip_error = hull.errors.iter().cloned().fold(0.0, f64::max);
    let last = hull.tips.last().copied().unwrap_or_default();
    ctx.out.json(
        "hull.json",
        &json!({ "t_end": cfg.driving.t_end, "tip": [last.re, last.im], "max_tip_error": tip_error }),
    )?;
    ctx.out.gnuplot(
        "hull.gp",
        &format!("{TRAJECTORY_PLOT}plot 'hull.csv' using 2:3 with lines title 'hull'\n"),
    )?;
    for (k, p) in cfg.points.iter().enumerate() {
        let traj = solve_ode_point(
            &cfg.driving,
            Complex64::new(p[0], p[1]),
            0.0,
            cfg.driving.t_end,
            cfg.samples,
            &opts,
        )?;
        let name = format!("trajectory_{k}.csv");
        let rows = traj
            .times
            .iter()
            .zip(&traj.values)
            .map(|(t, z)| vec![*t, z.re, z.im]);
        ctx.out.csv(&name, &["t", "re", "im"], rows)?;
        ctx.out.gnuplot(
            &format!("trajectory_{k}.gp"),
            &format!("{TRAJECTORY_PLOT}plot '{name}' using 2:3 with linespoints title 'g(w, t)'\n"),
        )?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSeries {
    pub driving: DrivingSpec,
    pub order: usize,
    #[serde(default = "ten")]
    pub samples: usize,
    /// Also check `n b_n' + (dA^0/dt) Phi_n'(xi)` (single branch only).
    #[serde(default)]
    pub check_flow: bool,
    #[serde(default)]
    pub options: LoewnerOpts,
}

pub fn evolve_series_cmd(cfg: &EvolveSeries, ctx: &mut Context) -> CliResult<()> {
    cfg.driving.validate()?;
    let opts = cfg.options.options();
    let traj = evolve_series(
        &cfg.driving,
        cfg.order,
        &time_grid(cfg.driving.t_end, cfg.samples),
        &opts,
    )?;
    let maps: Vec<_> = traj
        .times
        .iter()
        .zip(&traj.maps)
        .map(|(t, g)| json!({ "t": t, "series": g.to_json() }))
        .collect();
    ctx.out.json("series.json", &json!({ "maps": maps }))?;
    let rows = traj.times.iter().zip(&traj.maps).flat_map(|(t, g)| {
        g.coeffs()
            .iter()
            .enumerate()
            .map(move |(k, b)| vec![*t, (k + 1) as f64, *b])
            .collect::<Vec<_>>()
    });
    ctx.out
        .csv("coefficients.csv", &["t", "n", "value"], rows)?;
    ctx.out.gnuplot(
        "coefficients.gp",
        "set datafile separator ','\nset xlabel 't'\nplot for [n=1:*] 'coefficients.csv' using 1:($2==n ? $3 : 1/0) with lines title sprintf('b_%d', n)\n",
    )?;
    if cfg.check_flow {
        let report = coefficient_flow_check(&cfg.driving, cfg.order, &opts)?;
        ctx.check("coefficient_flow", report)?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitTime {
    pub xi: TimeFunction,
    /// Initial profile `t(x, 0)`; must agree at both ends of the `x` axis.
    pub t0: Profile,
    pub x: Axis,
    pub s: Axis,
}

pub fn split_time(cfg: &SplitTime, ctx: &mut Context) -> CliResult<()> {
    let (xs, ss) = (cfg.x.points(), cfg.s.points());
    let length = cfg.x.hi - cfg.x.lo;
    let t0 = |x: f64| cfg.t0.eval(x, length);
    let field = time_splitting_solve(&cfg.xi, &t0, &ss, &xs)?;
    let rows = field.s_grid.iter().enumerate().flat_map(|(j, s)| {
        field
            .x_grid
            .iter()
            .zip(&field.t_values[j])
            .map(|(x, t)| vec![*x, *s, *t])
            .collect::<Vec<_>>()
    });
    ctx.out.csv("split.csv", &["x", "s", "t"], rows)?;
    let finite = |v: f64| if v.is_finite() { json!(v) } else { json!(null) };
    ctx.out.json(
        "split.json",
        &json!({
            "valid_until": finite(field.valid_until),
            "crossing_x": finite(field.crossing_x),
        }),
    )?;
    ctx.out.gnuplot(
        "split.gp",
        "set datafile separator ','\nset xlabel 'x'\nset ylabel 's'\nsplot 'split.csv' using 1:2:3 with points title 't(x, s)'\n",
    )?;
    Ok(())
}
