//! The time-splitting field `t(x, s)` solving `xi(t) t_x + t_s = 0`.

use super::driving::TimeFunction;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct TimeSplitField {
    pub x_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    /// `t_values[j][i] = t(x_grid[i], s_grid[j])`.
    pub t_values: Vec<Vec<f64>>,
    /// First crossing time of neighbouring characteristics.
    pub valid_until: f64,
    /// Foot of the first crossing pair.
    pub crossing_x: f64,
}

/// Characteristic resolution for crossing detection.
const FOOT_CELLS: usize = 8192;

/// Traces straight characteristics `x = x0 + xi(t0(x0)) s` and inverts them
/// by bracketed root finding.
pub fn time_splitting_solve(
    xi: &TimeFunction,
    t0_profile: &(dyn Fn(f64) -> f64 + Sync),
    s_grid: &[f64],
    x_grid: &[f64],
) -> Result<TimeSplitField> {
    if x_grid.len() < 2 || x_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("x grid must increase strictly".into()));
    }
    let (xa, xb) = (x_grid[0], x_grid[x_grid.len() - 1]);
    let far = (t0_profile(xa) - t0_profile(xb)).abs();
    if far > 1e-12 {
        return Err(Error::Precondition(format!(
            "initial profile differs by {far:e} between the two ends of the grid"
        )));
    }
    let s_max = s_grid.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
    let speed = |x0: f64| xi.eval(t0_profile(x0));
    // Feet wide enough that every grid point at every s is reached.
    let mut cmax = 0.0f64;
    let probe = 2048;
    for i in 0..=probe {
        let x = xa + (xb - xa) * i as f64 / probe as f64;
        cmax = cmax.max(speed(x).abs());
    }
    let pad = cmax * s_max + 1e-9;
    let (fa, fb) = (xa - pad, xb + pad);
    let feet: Vec<f64> = (0..=FOOT_CELLS)
        .map(|i| fa + (fb - fa) * i as f64 / FOOT_CELLS as f64)
        .collect();
    let c: Vec<f64> = feet.iter().map(|&x| speed(x)).collect();
    let mut valid_until = f64::INFINITY;
    let mut crossing_x = f64::NAN;
    for i in 0..FOOT_CELLS {
        let dc = c[i] - c[i + 1];
        if dc > 0.0 {
            let s = (feet[i + 1] - feet[i]) / dc;
            if s < valid_until {
                valid_until = s;
                crossing_x = feet[i] + c[i] * s;
            }
        }
    }
    if s_grid.iter().any(|s| s.abs() > valid_until) {
        return Err(Error::Shock {
            s: valid_until,
            x: crossing_x,
        });
    }
    let mut t_values = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let row = x_grid
            .iter()
            .map(|&x| {
                let foot = foot_of(&feet, &c, s, x, &speed);
                t0_profile(foot)
            })
            .collect();
        t_values.push(row);
    }
    Ok(TimeSplitField {
        x_grid: x_grid.to_vec(),
        s_grid: s_grid.to_vec(),
        t_values,
        valid_until,
        crossing_x,
    })
}

// Root of x0 + c(x0) s - x, increasing in x0 before crossing.
fn foot_of(feet: &[f64], c: &[f64], s: f64, x: f64, speed: &dyn Fn(f64) -> f64) -> f64 {
    let reach = |i: usize| feet[i] + c[i] * s;
    let (mut lo, mut hi) = (0usize, feet.len() - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if reach(mid) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let g = |y: f64| y + speed(y) * s - x;
    let (mut a, mut b) = (feet[lo], feet[hi]);
    let (mut ga, mut gb) = (g(a), g(b));
    if ga == 0.0 {
        return a;
    }
    if gb == 0.0 {
        return b;
    }
    // Illinois false position.
    let mut side = 0i8;
    for _ in 0..200 {
        let m = (a * gb - b * ga) / (gb - ga);
        let gm = g(m);
        if gm == 0.0 || (b - a).abs() < 1e-15 * (1.0 + m.abs()) {
            return m;
        }
        if (gm > 0.0) == (gb > 0.0) {
            b = m;
            gb = gm;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = m;
            ga = gm;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (a + b)
}

/// `exp(1 - 1/(1 - x^2))` on `|x| < 1`, zero outside; height 1, width 2.
pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}
