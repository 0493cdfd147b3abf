use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{MomentField, Spectral};
use crate::kinetic::MomentHistory;

/// Top moment as a function of one column `A^0..A^N`.
pub type ColumnFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Supplies the first moment beyond the truncation.
#[derive(Clone)]
pub enum Closure {
    /// `A^n = eta v^n` with `eta = A^0`, `v = A^1 / A^0`.
    ColdPlasma,
    /// `A^{N+1}` as a function of the column `A^0..A^N`.
    N1Reduction(ColumnFn),
    /// `A^{N+1}(x, s)` sampled at times `s`, interpolated linearly.
    KineticFeed { s: Vec<f64>, rows: Vec<Vec<f64>> },
}

impl fmt::Debug for Closure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Closure::ColdPlasma => write!(f, "ColdPlasma"),
            Closure::N1Reduction(_) => write!(f, "N1Reduction(..)"),
            Closure::KineticFeed { s, .. } => write!(f, "KineticFeed({} slices)", s.len()),
        }
    }
}

impl Closure {
    pub fn name(&self) -> &'static str {
        match self {
            Closure::ColdPlasma => "cold_plasma",
            Closure::N1Reduction(_) => "n1_reduction",
            Closure::KineticFeed { .. } => "kinetic_feed",
        }
    }

    fn next_row(&self, a: &[Vec<f64>], s: f64) -> Result<Vec<f64>> {
        let order = a.len() - 1;
        let p = a[0].len();
        match self {
            Closure::ColdPlasma => (0..p)
                .map(|j| {
                    let eta = a[0][j];
                    if eta <= 0.0 {
                        return Err(Error::Domain(format!(
                            "cold plasma needs A^0 > 0, got {eta}"
                        )));
                    }
                    let v = a[1][j] / eta;
                    Ok(eta * v.powi(order as i32 + 1))
                })
                .collect(),
            Closure::N1Reduction(f) => Ok((0..p)
                .map(|j| {
                    let col: Vec<f64> = a.iter().map(|r| r[j]).collect();
                    f(&col)
                })
                .collect()),
            Closure::KineticFeed { s: times, rows } => {
                let last = *times.last().expect("validated nonempty");
                let tol = 1e-12 * last.abs().max(1.0);
                if s < times[0] - tol || s > last + tol {
                    return Err(Error::Precondition(format!(
                        "kinetic feed covers [{}, {last}], asked for s = {s}",
                        times[0]
                    )));
                }
                let k = times.partition_point(|t| *t <= s).clamp(1, times.len() - 1);
                let (t0, t1) = (times[k - 1], times[k]);
                let w = ((s - t0) / (t1 - t0)).clamp(0.0, 1.0);
                Ok(rows[k - 1]
                    .iter()
                    .zip(&rows[k])
                    .map(|(a, b)| (1.0 - w) * a + w * b)
                    .collect())
            }
        }
    }

    fn validate(&self, field: &MomentField) -> Result<()> {
        let p = field.grid.n;
        match self {
            Closure::ColdPlasma => {
                if field.order() < 1 {
                    return Err(Error::Precondition(
                        "cold plasma closure needs A^0 and A^1".into(),
                    ));
                }
                for j in 0..p {
                    let eta = field.a[0][j];
                    if eta <= 0.0 {
                        return Err(Error::Precondition(format!(
                            "cold plasma needs A^0 > 0, got {eta}"
                        )));
                    }
                    let v = field.a[1][j] / eta;
                    for (n, row) in field.a.iter().enumerate() {
                        let want = eta * v.powi(n as i32);
                        if (row[j] - want).abs() > 1e-8 * want.abs().max(1.0) {
                            return Err(Error::Precondition(format!(
                                "row {n} is not eta v^{n} at point {j}"
                            )));
                        }
                    }
                }
                Ok(())
            }
            Closure::N1Reduction(_) => Ok(()),
            Closure::KineticFeed { s, rows } => {
                if s.len() < 2 || s.len() != rows.len() {
                    return Err(Error::Precondition(
                        "kinetic feed needs matching times and rows (>= 2)".into(),
                    ));
                }
                if s.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Precondition(
                        "kinetic feed times must increase".into(),
                    ));
                }
                if rows.iter().any(|r| r.len() != p) {
                    return Err(Error::Precondition(
                        "kinetic feed rows must match the grid".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainOptions {
    /// Step size; `None` picks one from the characteristic speed.
    pub ds: Option<f64>,
    pub record_every: usize,
    pub blow_up: f64,
    /// Start time of the field.
    pub s0: f64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            ds: None,
            record_every: 1,
            blow_up: 1e6,
            s0: 0.0,
        }
    }
}

/// `dA^m/ds = -A^{m+1}_x - m A^{m-1} A^0_x`, `m = 0..=N`.
fn rhs(sp: &Spectral, a: &[Vec<f64>], closure: &Closure, s: f64) -> Result<Vec<Vec<f64>>> {
    let order = a.len() - 1;
    let next = closure.next_row(a, s)?;
    let a0x = sp.derivative(&a[0]);
    Ok((0..=order)
        .map(|m| {
            let up = if m < order { &a[m + 1] } else { &next };
            let flux = sp.derivative(up);
            flux.iter()
                .enumerate()
                .map(|(j, fx)| {
                    let lower = if m > 0 {
                        m as f64 * a[m - 1][j] * a0x[j]
                    } else {
                        0.0
                    };
                    -fx - lower
                })
                .collect()
        })
        .collect())
}

fn axpy(a: &[Vec<f64>], h: f64, k: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(k)
        .map(|(r, kr)| r.iter().zip(kr).map(|(x, y)| x + h * y).collect())
        .collect()
}

fn default_ds(field: &MomentField) -> f64 {
    let speed = (0..field.grid.n)
        .map(|j| {
            let a0 = field.a[0][j].abs().max(1e-300);
            let v = field.a.get(1).map_or(0.0, |r| r[j] / a0);
            v.abs() + a0.sqrt()
        })
        .fold(0.0f64, f64::max)
        .max(1e-3);
    0.2 * field.grid.dx() / speed
}

/// Method-of-lines RK4 for the truncated Benney chain with spectral `x`.
pub fn evolve_chain(
    field: &MomentField,
    closure: &Closure,
    s_end: f64,
    opts: &ChainOptions,
) -> Result<MomentHistory> {
    if field.a.is_empty() {
        return Err(Error::Precondition("empty moment field".into()));
    }
    closure.validate(field)?;
    let span = s_end - opts.s0;
    let ds_target = opts.ds.unwrap_or_else(|| default_ds(field));
    if !(ds_target > 0.0) || !span.is_finite() || span < 0.0 {
        return Err(Error::Precondition("need ds > 0 and s_end >= s0".into()));
    }
    let steps = (span / ds_target).ceil().max(1.0) as usize;
    let ds = span / steps as f64;
    let record_every = opts.record_every.max(1);
    let sp = Spectral::new(field.grid);
    let mut a = field.a.clone();
    let mut hist = MomentHistory {
        s: vec![opts.s0],
        fields: vec![MomentField::new(field.grid, a.clone())],
    };
    for step in 1..=steps {
        let s = opts.s0 + (step - 1) as f64 * ds;
        let k1 = rhs(&sp, &a, closure, s)?;
        let k2 = rhs(&sp, &axpy(&a, 0.5 * ds, &k1), closure, s + 0.5 * ds)?;
        let k3 = rhs(&sp, &axpy(&a, 0.5 * ds, &k2), closure, s + 0.5 * ds)?;
        let k4 = rhs(&sp, &axpy(&a, ds, &k3), closure, s + ds)?;
        for (m, row) in a.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += ds / 6.0 * (k1[m][j] + 2.0 * k2[m][j] + 2.0 * k3[m][j] + k4[m][j]);
            }
        }
        let s_now = opts.s0 + step as f64 * ds;
        let max = a.iter().flatten().fold(0.0f64, |acc, v| {
            if v.is_finite() {
                acc.max(v.abs())
            } else {
                f64::INFINITY
            }
        });
        if max > opts.blow_up {
            return Err(Error::BlowUp { s: s_now, max });
        }
        if step % record_every == 0 || step == steps {
            hist.s.push(s_now);
            hist.fields.push(MomentField::new(field.grid, a.clone()));
        }
    }
    Ok(hist)
}
