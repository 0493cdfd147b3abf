use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{Control, Dp45};
use crate::report::ResidualReport;

use super::state::{Reduction, ReductionSamples, DELTA_SEP};

fn nearest_gap(mu: &[f64], z: Complex64) -> (usize, f64) {
    mu.iter()
        .enumerate()
        .map(|(i, m)| (i, (Complex64::new(*m, 0.0) - z).norm()))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
}

/// Integrates `d_i z = d_i u / (mu_i - z)` along a piecewise-linear path in `r`-space.
pub fn loewner_system_integrate(
    red: &dyn Reduction,
    z0: Complex64,
    path: &[Vec<f64>],
) -> Result<Complex64> {
    let n = red.components();
    if path.len() < 2 || path.iter().any(|p| p.len() != n) {
        return Err(Error::Precondition(format!(
            "path needs at least two points with {n} coordinates"
        )));
    }
    let ode = Dp45::with_tolerances(1e-12, 1e-14);
    let mut z = [z0.re, z0.im];
    for seg in path.windows(2) {
        let (p, q) = (&seg[0], &seg[1]);
        let dir: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
        let at = |t: f64| -> Vec<f64> { p.iter().zip(&dir).map(|(a, b)| a + t * b).collect() };
        let velocity = |t: f64, y: &[f64]| -> (Complex64, usize, f64, Vec<f64>) {
            let r = at(t);
            let zc = Complex64::new(y[0], y[1]);
            let mu = red.mu(&r);
            let (i, gap) = nearest_gap(&mu, zc);
            let grad = red.grad_u(&r);
            let mut dz = Complex64::new(0.0, 0.0);
            for k in 0..mu.len() {
                if dir[k] != 0.0 {
                    dz += grad[k] * dir[k] / (Complex64::new(mu[k], 0.0) - zc);
                }
            }
            (dz, i, gap, mu)
        };
        let rhs = |t: f64, y: &[f64], d: &mut [f64]| {
            let (dz, _, gap, _) = velocity(t, y);
            if gap < 0.5 * DELTA_SEP {
                return Err(Error::Singularity {
                    gap,
                    location: format!("r = {:?}", at(t)),
                });
            }
            d[0] = dz.re;
            d[1] = dz.im;
            Ok(())
        };
        // Steps shrink with the distance to the nearest velocity, so an
        // approach is seen by the observer before the stages blow up.
        let cap = |t: f64, y: &[f64]| {
            let (dz, _, gap, _) = velocity(t, y);
            0.25 * gap / dz.norm().max(1e-300)
        };
        let mut hit: Option<Error> = None;
        let observe = |t: f64, y: &[f64]| {
            let (_, i, gap, mu) = velocity(t, y);
            if gap < DELTA_SEP {
                hit = Some(Error::Singularity {
                    gap,
                    location: format!(
                        "r = {:?}, z = {}, mu_{i} = {}",
                        at(t),
                        Complex64::new(y[0], y[1]),
                        mu[i]
                    ),
                });
                Control::Stop
            } else {
                Control::Continue
            }
        };
        let out = ode.integrate(rhs, 0.0, &z, 1.0, cap, observe)?;
        if let Some(e) = hit {
            return Err(e);
        }
        z = [out.y[0], out.y[1]];
    }
    Ok(Complex64::new(z[0], z[1]))
}

/// Generating commuting-flow velocities `w^i = 1 / (mu_i - z)`.
pub fn commuting_reduction_velocity(mu: &[f64], z: Complex64) -> Result<Vec<Complex64>> {
    let (i, gap) = nearest_gap(mu, z);
    if gap < DELTA_SEP {
        return Err(Error::Singularity {
            gap,
            location: format!("z = {z}, mu_{i} = {}", mu[i]),
        });
    }
    Ok(mu
        .iter()
        .map(|m| 1.0 / (Complex64::new(*m, 0.0) - z))
        .collect())
}

/// Residual of `d_i zt = zt d_i H / (mu_i - zt - H)` with `zt = z - H`, `H = H^{-1}`,
/// from `z` and `H` sampled on the r-grid of `samples`; centered differences at interior nodes.
pub fn modified_loewner_check(
    samples: &ReductionSamples,
    z: &[f64],
    hm1: &[f64],
) -> Result<ResidualReport> {
    samples.validate()?;
    let g = &samples.grid;
    if z.len() != g.len() || hm1.len() != g.len() {
        return Err(Error::Precondition(
            "z and H^-1 must be sampled on the r-grid".into(),
        ));
    }
    let zt: Vec<f64> = z.iter().zip(hm1).map(|(a, b)| a - b).collect();
    let mut values = Vec::new();
    for p in (0..g.len()).filter(|&p| g.is_interior(p)) {
        for i in 0..g.dim() {
            let st = g.stride(i);
            let d = |f: &[f64]| (f[p + st] - f[p - st]) / (2.0 * g.h[i]);
            let den = samples.mu[i][p] - z[p];
            if den.abs() < DELTA_SEP {
                return Err(Error::Singularity {
                    gap: den,
                    location: format!("r = {:?}", g.point(p)),
                });
            }
            values.push(d(&zt) - zt[p] * d(hm1) / den);
        }
    }
    Ok(ResidualReport::from_values(
        "modified_loewner",
        g.n.iter().copied().max().unwrap_or(0),
        values,
    ))
}
