use num_complex::Complex64;
use rayon::prelude::*;

use super::driving::DrivingSpec;
use crate::error::{Error, Result};
use crate::faber::{faber_all, faber_derivative, reciprocal_coefficients};
use crate::ode::{Control, Dp45};
use crate::report::ResidualReport;
use crate::series::AsymptoticSeries;

#[derive(Clone, Debug)]
pub struct LoewnerOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Step clamp `h <= eta * min|g - xi|^2 / |dA^0/dt|`.
    pub eta: f64,
    pub eps_swallow: f64,
    pub delta_tip: f64,
}

impl Default for LoewnerOptions {
    fn default() -> Self {
        LoewnerOptions {
            rtol: 1e-12,
            atol: 1e-14,
            eta: 0.1,
            eps_swallow: 1e-6,
            delta_tip: 1e-4,
        }
    }
}

impl LoewnerOptions {
    fn integrator(&self) -> Dp45 {
        Dp45::with_tolerances(self.rtol, self.atol)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowOutcome {
    pub value: Complex64,
    /// Time reached; equals the target unless the point was swallowed.
    pub t: f64,
    pub swallowed_at: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub swallowed_at: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HullTrace {
    pub times: Vec<f64>,
    pub tips: Vec<Complex64>,
    /// Richardson estimate of the error from the finite tip offset.
    pub errors: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SeriesTrajectory {
    pub times: Vec<f64>,
    /// `g(w, t) = w + sum b_n w^{-n}`; `coeffs()[n-1] = b_n`.
    pub maps: Vec<AsymptoticSeries<f64>>,
}

impl SeriesTrajectory {
    pub fn a0(&self, i: usize) -> f64 {
        -self.maps[i].coeffs()[0]
    }
}

fn min_gap(spec: &DrivingSpec, t: f64, g: Complex64) -> f64 {
    (0..spec.m())
        .map(|k| (g - spec.xi(k, t)).norm())
        .fold(f64::INFINITY, f64::min)
}

fn velocity(spec: &DrivingSpec, t: f64, mid: f64, g: Complex64) -> Result<Complex64> {
    let rate = spec.hcap.derivative_within(t, mid);
    let mut v = Complex64::new(0.0, 0.0);
    if rate == 0.0 {
        return Ok(v);
    }
    for k in 0..spec.m() {
        let d = g - spec.xi(k, t);
        if d.norm() == 0.0 {
            return Err(Error::Singularity {
                gap: 0.0,
                location: format!("t = {t}, branch {k}"),
            });
        }
        v += spec.weight(k, t) / d;
    }
    Ok(v * rate)
}

/// `g(w, to, from)`: transports `w` from time `from` to time `to` along the
/// Loewner vector field. Backward runs (`to < from`) invert the forward map.
pub fn flow(
    spec: &DrivingSpec,
    w: Complex64,
    from: f64,
    to: f64,
    opts: &LoewnerOptions,
) -> Result<FlowOutcome> {
    if w.im < 0.0 {
        return Err(Error::Precondition(format!(
            "point {w} below the real axis"
        )));
    }
    let forward = to >= from;
    if forward && min_gap(spec, from, w) <= opts.eps_swallow {
        return Err(Error::Precondition(format!(
            "point {w} starts on a driving position at t = {from}"
        )));
    }
    let ode = opts.integrator();
    let mut y = [w.re, w.im];
    let mut h = 0.0;
    for (a, b) in spec.pieces(from, to) {
        let mid = 0.5 * (a + b);
        let mut swallowed = None;
        let mut ode = ode.clone();
        ode.h_init = h;
        let out = ode.integrate(
            |t, y, d| {
                let v = velocity(spec, t, mid, Complex64::new(y[0], y[1]))?;
                d[0] = v.re;
                d[1] = v.im;
                Ok(())
            },
            a,
            &y,
            b,
            |t, y| {
                let rate = spec.hcap.derivative_within(t, mid).abs();
                if rate == 0.0 {
                    f64::INFINITY
                } else {
                    opts.eta * min_gap(spec, t, Complex64::new(y[0], y[1])).powi(2) / rate
                }
            },
            |t, y| {
                if forward && min_gap(spec, t, Complex64::new(y[0], y[1])) < opts.eps_swallow {
                    swallowed = Some(t);
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        )?;
        y = [out.y[0], out.y[1]];
        h = out.last_h;
        if let Some(ts) = swallowed {
            return Ok(FlowOutcome {
                value: Complex64::new(y[0], y[1]),
                t: ts,
                swallowed_at: Some(ts),
            });
        }
    }
    Ok(FlowOutcome {
        value: Complex64::new(y[0], y[1]),
        t: to,
        swallowed_at: None,
    })
}

/// Trajectory `g(w, t, tau)` sampled at `samples + 1` uniform times in `[tau, t_end]`.
///
/// A swallowed point ends the trajectory at the swallow time.
pub fn solve_ode_point(
    spec: &DrivingSpec,
    w: Complex64,
    tau: f64,
    t_end: f64,
    samples: usize,
    opts: &LoewnerOptions,
) -> Result<PointTrajectory> {
    if !(tau <= t_end) {
        return Err(Error::Precondition(format!(
            "tau = {tau} exceeds t_end = {t_end}"
        )));
    }
    let samples = samples.max(1);
    let mut times = vec![tau];
    let mut values = vec![w];
    let mut g = w;
    for i in 1..=samples {
        let t0 = times[times.len() - 1];
        let t1 = tau + (t_end - tau) * i as f64 / samples as f64;
        let out = flow(spec, g, t0, t1, opts)?;
        times.push(out.t);
        values.push(out.value);
        if out.swallowed_at.is_some() {
            return Ok(PointTrajectory {
                times,
                values,
                swallowed_at: out.swallowed_at,
            });
        }
        g = out.value;
    }
    Ok(PointTrajectory {
        times,
        values,
        swallowed_at: None,
    })
}

/// `f(z, t)`, the inverse of `g(., t)`, by backward integration to time zero.
pub fn map_f(spec: &DrivingSpec, z: Complex64, t: f64, opts: &LoewnerOptions) -> Result<Complex64> {
    Ok(flow(spec, z, t, 0.0, opts)?.value)
}

/// Hull tips `f(xi_t + i delta, t)` for a single-branch spec.
pub fn trace_hull(spec: &DrivingSpec, t_grid: &[f64], opts: &LoewnerOptions) -> Result<HullTrace> {
    if spec.m() != 1 {
        return Err(Error::Precondition(
            "hull tracing needs a single branch".into(),
        ));
    }
    let d = opts.delta_tip;
    let rows: Vec<Result<(Complex64, f64)>> = t_grid
        .par_iter()
        .map(|&t| {
            let xi = spec.xi(0, t);
            if spec.hcap(t) <= 0.0 {
                return Ok((Complex64::new(xi, 0.0), 0.0));
            }
            let tip = map_f(spec, Complex64::new(xi, d), t, opts)?;
            let half = map_f(spec, Complex64::new(xi, 0.5 * d), t, opts)?;
            Ok((tip, (tip - half).norm() * 4.0 / 3.0))
        })
        .collect();
    let mut tips = Vec::with_capacity(t_grid.len());
    let mut errors = Vec::with_capacity(t_grid.len());
    for r in rows {
        let (tip, e) = r?;
        tips.push(tip);
        errors.push(e);
    }
    Ok(HullTrace {
        times: t_grid.to_vec(),
        tips,
        errors,
    })
}

/// Coefficients `b_1..b_n` of `g(w, t)` at each requested time (ascending).
///
/// `b_1 = hcap(t)` exactly; the rest solve the expansion of the vector field
/// at infinity.
pub fn evolve_series(
    spec: &DrivingSpec,
    n: usize,
    times: &[f64],
    opts: &LoewnerOptions,
) -> Result<SeriesTrajectory> {
    if n == 0 {
        return Err(Error::Precondition(
            "series order must be at least 1".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::Precondition(
            "output times must be nonnegative and ascending".into(),
        ));
    }
    let ode = opts.integrator();
    let rhs = |t: f64, mid: f64, y: &[f64], d: &mut [f64]| -> Result<()> {
        let rate = spec.hcap.derivative_within(t, mid);
        d.iter_mut().for_each(|v| *v = 0.0);
        if rate == 0.0 {
            return Ok(());
        }
        let mut b = vec![spec.hcap(t)];
        b.extend_from_slice(y);
        let g = AsymptoticSeries::new(b);
        for k in 0..spec.m() {
            let c = reciprocal_coefficients(&g, spec.xi(k, t), n);
            let wk = spec.weight(k, t);
            for (i, dv) in d.iter_mut().enumerate() {
                *dv += rate * wk * c[i + 1];
            }
        }
        Ok(())
    };
    let mut y = vec![0.0; n - 1];
    let mut t = 0.0;
    let mut maps = Vec::with_capacity(times.len());
    for &target in times {
        if n > 1 {
            for (a, b) in spec.pieces(t, target) {
                let mid = 0.5 * (a + b);
                y = ode.solve(|t, y, d| rhs(t, mid, y, d), a, &y, b)?;
            }
        }
        t = target;
        let mut b = vec![spec.hcap(t)];
        b.extend_from_slice(&y);
        maps.push(AsymptoticSeries::new(b));
    }
    Ok(SeriesTrajectory {
        times: times.to_vec(),
        maps,
    })
}

/// Max of `|n b_n' + (dA^0/dt) Phi_n'(xi_t)|` over `n <= N` and a time grid,
/// with `b_n'` by fourth-order central differences of [`evolve_series`].
pub fn coefficient_flow_check(
    spec: &DrivingSpec,
    n: usize,
    opts: &LoewnerOptions,
) -> Result<ResidualReport> {
    if spec.m() != 1 {
        return Err(Error::Precondition(
            "coefficient flow check needs a single branch".into(),
        ));
    }
    let h = 1e-3;
    let t_end = spec.t_end;
    let centers: Vec<f64> = (0..=20)
        .map(|i| t_end * (0.1 + 0.8 * i as f64 / 20.0))
        .collect();
    if centers[0] < 2.0 * h {
        return Err(Error::Precondition(
            "time span too short for the difference stencil".into(),
        ));
    }
    let offsets = [-2.0, -1.0, 1.0, 2.0];
    let mut times = Vec::new();
    for &c in &centers {
        times.push(c);
        times.extend(offsets.iter().map(|o| c + o * h));
    }
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    let traj = evolve_series(spec, n, &sorted, opts)?;
    let at = |t: f64| -> &AsymptoticSeries<f64> {
        let i = sorted.iter().position(|s| *s == t).expect("time requested");
        &traj.maps[i]
    };
    let mut values = Vec::new();
    for &c in &centers {
        let g = at(c);
        let (m2, m1, p1, p2) = (at(c - 2.0 * h), at(c - h), at(c + h), at(c + 2.0 * h));
        let phi = faber_all(g.coeffs(), n)?;
        let xi = spec.xi(0, c);
        let da0 = spec.da0_dt(c);
        for k in 1..=n {
            let b = |s: &AsymptoticSeries<f64>| s.coeffs()[k - 1];
            let db = (b(m2) - 8.0 * b(m1) + 8.0 * b(p1) - b(p2)) / (12.0 * h);
            values.push(k as f64 * db + da0 * faber_derivative(&phi[k], xi));
        }
    }
    Ok(ResidualReport::from_values(
        "coefficient_flow",
        centers.len(),
        values,
    ))
}
