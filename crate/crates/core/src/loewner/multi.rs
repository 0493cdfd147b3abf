//! Vector-time and successive-slit variants.

use std::sync::Arc;

use num_complex::Complex64;

use super::driving::{Branch, DrivingSpec, TimeFunction};
use super::flow::{evolve_series, flow, LoewnerOptions};
use crate::error::{Error, Result};
use crate::series::{compose, AsymptoticSeries};

/// Driving data for the vector-time system.
///
/// Branch `k` moves with its own clock `t_k`; the capacity depends on the
/// clocks only through `sigma = sum t_k`, which makes every partial of `A^0`
/// equal. `rates` fix the path `dt_k/dt_1 = rates_k / rates_1` along which
/// the system is reduced.
#[derive(Clone, Debug)]
pub struct VectorTimeSpec {
    pub xi: Vec<TimeFunction>,
    pub rates: Vec<TimeFunction>,
    /// Capacity as a function of `sigma`.
    pub hcap: TimeFunction,
    /// End of the reduced clock `t_1`.
    pub t_end: f64,
}

/// A single-time spec equivalent to a vector-time spec, plus the clocks
/// `t_k(t_1)`.
#[derive(Clone, Debug)]
pub struct ReducedTime {
    pub spec: DrivingSpec,
    pub clocks: Vec<TimeFunction>,
}

const QUAD_CELLS: usize = 4096;

// Cumulative integral of `ratio` on [0, t_end] at QUAD_CELLS + 1 knots,
// Simpson on each cell.
fn cumulative(ratio: &(dyn Fn(f64) -> f64 + Send + Sync), t_end: f64) -> Vec<f64> {
    let h = t_end / QUAD_CELLS as f64;
    let mut acc = vec![0.0; QUAD_CELLS + 1];
    for i in 0..QUAD_CELLS {
        let a = i as f64 * h;
        acc[i + 1] = acc[i] + h / 6.0 * (ratio(a) + 4.0 * ratio(a + 0.5 * h) + ratio(a + h));
    }
    acc
}

// Cubic Hermite interpolation of an antiderivative with known slope.
fn hermite_clock(
    values: Arc<Vec<f64>>,
    slope: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    t_end: f64,
) -> TimeFunction {
    let h = t_end / QUAD_CELLS as f64;
    let s2 = slope.clone();
    TimeFunction::custom(
        move |t| {
            let x = (t / h).clamp(0.0, QUAD_CELLS as f64);
            let i = (x.floor() as usize).min(QUAD_CELLS - 1);
            let u = x - i as f64;
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            let (p0, p1) = (values[i], values[i + 1]);
            let (m0, m1) = (slope(a) * h, slope(b) * h);
            let (u2, u3) = (u * u, u * u * u);
            (2.0 * u3 - 3.0 * u2 + 1.0) * p0
                + (u3 - 2.0 * u2 + u) * m0
                + (-2.0 * u3 + 3.0 * u2) * p1
                + (u3 - u2) * m1
        },
        move |t| s2(t),
    )
}

/// Reduces the vector-time system to a multi-slit single-time system along
/// `dt_k/dt_1 = mu_k / mu_1`.
///
/// The reduced capacity is `hcap(sigma(t_1))`, so its rate is
/// `hcap'(sigma) / mu_1` and the weights stay `mu_k`.
pub fn vector_time_reduce(spec: &VectorTimeSpec) -> Result<ReducedTime> {
    let m = spec.xi.len();
    if m == 0 || spec.rates.len() != m {
        return Err(Error::Precondition("need one rate per branch".into()));
    }
    let samples = 400;
    for i in 0..=samples {
        let t = spec.t_end * i as f64 / samples as f64;
        let mu1 = spec.rates[0].eval(t);
        if !(mu1 > 0.0) {
            return Err(Error::Precondition(format!(
                "first weight vanishes at t = {t}"
            )));
        }
        let total: f64 = spec.rates.iter().map(|r| r.eval(t)).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "weights sum to {total} at t = {t}"
            )));
        }
    }
    let all_const = spec
        .rates
        .iter()
        .all(|r| matches!(r, TimeFunction::Const(_)));
    let mut clocks = Vec::with_capacity(m);
    for k in 0..m {
        let clock = if k == 0 {
            TimeFunction::linear(1.0)
        } else if all_const {
            TimeFunction::linear(spec.rates[k].eval(0.0) / spec.rates[0].eval(0.0))
        } else {
            let (rk, r1) = (spec.rates[k].clone(), spec.rates[0].clone());
            let ratio: Arc<dyn Fn(f64) -> f64 + Send + Sync> =
                Arc::new(move |t| rk.eval(t) / r1.eval(t));
            let table = cumulative(ratio.as_ref(), spec.t_end);
            hermite_clock(Arc::new(table), ratio, spec.t_end)
        };
        clocks.push(clock);
    }
    let sigma = {
        let cl = clocks.clone();
        move |t: f64| cl.iter().map(|c| c.eval(t)).sum::<f64>()
    };
    let hcap = {
        let (h1, h2) = (spec.hcap.clone(), spec.hcap.clone());
        let (s1, s2) = (sigma.clone(), sigma);
        let r1 = spec.rates[0].clone();
        TimeFunction::custom(
            move |t| h1.eval(s1(t)),
            move |t| h2.derivative(s2(t)) / r1.eval(t),
        )
    };
    let branches = (0..m)
        .map(|k| {
            let (x1, x2) = (spec.xi[k].clone(), spec.xi[k].clone());
            let (c1, c2) = (clocks[k].clone(), clocks[k].clone());
            Branch {
                xi: TimeFunction::custom(
                    move |t| x1.eval(c1.eval(t)),
                    move |t| x2.derivative(c2.eval(t)) * c2.derivative(t),
                ),
                weight: Some(spec.rates[k].clone()),
            }
        })
        .collect();
    let reduced = DrivingSpec {
        branches,
        hcap,
        t_end: spec.t_end,
    };
    reduced.validate()?;
    Ok(ReducedTime {
        spec: reduced,
        clocks,
    })
}

// Flow of one clock with the others frozen: dg/dt_k = hcap'(sigma)/(g - xi_k(t_k)).
fn clock_flow(
    spec: &VectorTimeSpec,
    k: usize,
    clocks: &[f64],
    w: Complex64,
    to: f64,
    opts: &LoewnerOptions,
) -> Result<Complex64> {
    let others: f64 = clocks
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != k)
        .map(|(_, c)| c)
        .sum();
    let xi = spec.xi[k].clone();
    let (h1, h2) = (spec.hcap.clone(), spec.hcap.clone());
    let single = DrivingSpec {
        branches: vec![Branch { xi, weight: None }],
        hcap: TimeFunction::custom(
            move |t| h1.eval(others + t),
            move |t| h2.derivative(others + t),
        ),
        t_end: f64::MAX,
    };
    Ok(flow(&single, w, clocks[k], to, opts)?.value)
}

/// `g(w)` at reduced time `t1` from the one-clock flows alone.
///
/// Symmetric (Strang) products over `macro_steps` and `2 * macro_steps`
/// steps along the reduction path are combined by one Richardson step; the
/// splitting error is even in the step, so this removes its leading term.
/// This route never forms the multi-slit vector field.
pub fn vector_time_direct(
    spec: &VectorTimeSpec,
    reduced: &ReducedTime,
    w: Complex64,
    t1: f64,
    macro_steps: usize,
    opts: &LoewnerOptions,
) -> Result<Complex64> {
    let coarse = strang_product(spec, reduced, w, t1, macro_steps, opts)?;
    let fine = strang_product(spec, reduced, w, t1, 2 * macro_steps, opts)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

fn strang_product(
    spec: &VectorTimeSpec,
    reduced: &ReducedTime,
    w: Complex64,
    t1: f64,
    macro_steps: usize,
    opts: &LoewnerOptions,
) -> Result<Complex64> {
    let m = spec.xi.len();
    let mut g = w;
    let mut clocks = vec![0.0; m];
    for step in 0..macro_steps {
        let a = t1 * step as f64 / macro_steps as f64;
        let b = t1 * (step + 1) as f64 / macro_steps as f64;
        let mid = 0.5 * (a + b);
        let target = |k: usize, t: f64| reduced.clocks[k].eval(t);
        for k in 0..m - 1 {
            let to = target(k, mid);
            g = clock_flow(spec, k, &clocks, g, to, opts)?;
            clocks[k] = to;
        }
        let to = target(m - 1, b);
        g = clock_flow(spec, m - 1, &clocks, g, to, opts)?;
        clocks[m - 1] = to;
        for k in (0..m - 1).rev() {
            let to = target(k, b);
            g = clock_flow(spec, k, &clocks, g, to, opts)?;
            clocks[k] = to;
        }
    }
    Ok(g)
}

/// One slit grown on `[start, end]`; `xi` and `hcap` use the local time
/// `t - start`, with `hcap(0) = 0`.
#[derive(Clone, Debug)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub xi: TimeFunction,
    pub hcap: TimeFunction,
}

/// Slits grown one after another; each flow is idle outside its interval.
#[derive(Clone, Debug)]
pub struct SuccessiveSlits {
    segments: Vec<Segment>,
}

impl SuccessiveSlits {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Precondition("no segments".into()));
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.end > s.start) {
                return Err(Error::Precondition(format!(
                    "segment {i} has empty interval"
                )));
            }
            if i > 0 && s.start < segments[i - 1].end {
                return Err(Error::Precondition(format!(
                    "segment {i} starts at {} before segment {} ends at {}",
                    s.start,
                    i - 1,
                    segments[i - 1].end
                )));
            }
        }
        let out = SuccessiveSlits { segments };
        for k in 0..out.segments.len() {
            out.segment_spec(k).validate()?;
        }
        Ok(out)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment_spec(&self, k: usize) -> DrivingSpec {
        let s = &self.segments[k];
        DrivingSpec {
            branches: vec![Branch {
                xi: s.xi.clone(),
                weight: None,
            }],
            hcap: s.hcap.clone(),
            t_end: s.end - s.start,
        }
    }

    /// `g_m( ... g_1(w))` at the end of the last segment.
    pub fn map_g(&self, w: Complex64, opts: &LoewnerOptions) -> Result<Complex64> {
        let mut g = w;
        for k in 0..self.segments.len() {
            let spec = self.segment_spec(k);
            let out = flow(&spec, g, 0.0, spec.t_end, opts)?;
            if out.swallowed_at.is_some() {
                return Err(Error::Domain(format!("point {w} swallowed in segment {k}")));
            }
            g = out.value;
        }
        Ok(g)
    }

    /// Composed expansion at infinity, `b_1..b_n`.
    pub fn series(&self, n: usize, opts: &LoewnerOptions) -> Result<AsymptoticSeries<f64>> {
        let mut total = AsymptoticSeries::<f64>::identity(n - 1);
        for k in 0..self.segments.len() {
            let spec = self.segment_spec(k);
            let seg = evolve_series(&spec, n, &[spec.t_end], opts)?.maps.remove(0);
            total = compose(&seg, &total, n - 1);
        }
        Ok(total)
    }

    pub fn total_hcap(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.hcap.eval(s.end - s.start))
            .sum()
    }
}
