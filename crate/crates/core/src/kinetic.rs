//! Vlasov dynamics `phi_s + w phi_x - A^0_x phi_w = 0` with `A^0 = int phi dw`.
//!
//! Semi-Lagrangian Strang splitting: half free streaming in `x`, a full
//! velocity kick from the refreshed force, half streaming. Both substeps are
//! uniform shifts along one axis, interpolated with four-point Lagrange
//! stencils whose weights sum to one. Undershoots are clamped to zero and
//! each shifted line is rescaled to its pre-clamp sum, so mass is conserved
//! to round-off and the distribution stays nonnegative.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{MomentField, PeriodicGrid, Spectral};
use crate::report::ResidualReport;

/// Threshold below which the distribution counts as decayed.
pub const DECAY: f64 = 1e-12;

/// Uniform velocity grid `w_i = min + i dw`, `i = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityGrid {
    pub min: f64,
    pub dw: f64,
    pub n: usize,
}

impl VelocityGrid {
    /// `n` points on `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n: usize) -> Self {
        assert!(n >= 4 && half_width > 0.0);
        VelocityGrid {
            min: -half_width,
            dw: 2.0 * half_width / (n - 1) as f64,
            n,
        }
    }

    /// Symmetric window 1.5 times wider than the region where `phi >= 1e-12`
    /// anywhere on the `x` grid.
    pub fn auto(phi: &dyn Fn(f64, f64) -> f64, x: &PeriodicGrid, n: usize) -> Result<Self> {
        let step = 0.01;
        let mut last = 0.0f64;
        let mut w = 0.0;
        while w < 1e3 {
            let big = (0..x.n).any(|j| phi(w, x.x(j)) >= DECAY || phi(-w, x.x(j)) >= DECAY);
            if big {
                last = w;
            }
            w += step;
            if w > 2.0 * last + 5.0 {
                break;
            }
        }
        if last >= 1e3 - step {
            return Err(Error::Domain(
                "distribution does not decay within |w| < 1000".into(),
            ));
        }
        Ok(Self::symmetric(1.5 * (last + step), n))
    }

    pub fn w(&self, i: usize) -> f64 {
        self.min + i as f64 * self.dw
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.w(i)).collect()
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.dw
        } else {
            self.dw
        }
    }

    /// `w -> -w` maps node `i` to node `n - 1 - i`.
    pub fn is_symmetric(&self) -> bool {
        (self.min + self.w(self.n - 1)).abs() < 1e-12 * self.dw.max(1.0)
    }
}

#[derive(Clone)]
pub enum Shape {
    /// `exp(-f^2)`; only `f^2` needs to be real.
    Gaussian,
    /// Any positive, rapidly decreasing function of a real `f`.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shape::Gaussian => write!(f, "Gaussian"),
            Shape::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// `phi(w, x)` stored by `x` column: `phi[ix * nw + iw]`.
#[derive(Clone, Debug, PartialEq)]
pub struct KineticState {
    pub w: VelocityGrid,
    pub x: PeriodicGrid,
    pub s: f64,
    phi: Vec<f64>,
}

impl KineticState {
    pub fn new(w: VelocityGrid, x: PeriodicGrid, phi: Vec<f64>, s: f64) -> Result<Self> {
        if phi.len() != w.n * x.n {
            return Err(Error::Precondition(format!(
                "distribution has {} values, grid needs {}",
                phi.len(),
                w.n * x.n
            )));
        }
        if let Some(v) = phi.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "distribution value {v} is not a finite nonnegative number"
            )));
        }
        Ok(KineticState { w, x, s, phi })
    }

    pub fn from_fn(w: VelocityGrid, x: PeriodicGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut phi = Vec::with_capacity(w.n * x.n);
        for ix in 0..x.n {
            for iw in 0..w.n {
                phi.push(f(w.w(iw), x.x(ix)));
            }
        }
        Self::new(w, x, phi, 0.0)
    }

    pub fn phi(&self, ix: usize, iw: usize) -> f64 {
        self.phi[ix * self.w.n + iw]
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    pub fn column(&self, ix: usize) -> &[f64] {
        &self.phi[ix * self.w.n..(ix + 1) * self.w.n]
    }

    pub fn mass(&self) -> f64 {
        self.a0().iter().sum::<f64>() * self.x.dx()
    }

    /// Largest value on the two velocity edges.
    pub fn edge_max(&self) -> f64 {
        (0..self.x.n)
            .map(|ix| self.phi(ix, 0).max(self.phi(ix, self.w.n - 1)))
            .fold(0.0, f64::max)
    }

    pub fn decayed(&self) -> bool {
        self.edge_max() < DECAY
    }

    pub fn a0(&self) -> Vec<f64> {
        (0..self.x.n)
            .map(|ix| {
                self.column(ix)
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * self.w.weight(i))
                    .sum()
            })
            .collect()
    }

    /// `phi(w, x) -> phi(-w, -x)`.
    pub fn reflected(&self) -> Result<Self> {
        self.require_symmetric()?;
        let (nx, nw) = (self.x.n, self.w.n);
        let mut phi = vec![0.0; nx * nw];
        for ix in 0..nx {
            let jx = (nx - ix) % nx;
            for iw in 0..nw {
                phi[jx * nw + (nw - 1 - iw)] = self.phi(ix, iw);
            }
        }
        Ok(KineticState {
            phi,
            ..self.clone()
        })
    }

    /// `phi(w, x) -> phi(-w, x)`.
    pub fn velocity_reversed(&self) -> Result<Self> {
        self.require_symmetric()?;
        let nw = self.w.n;
        let mut phi = self.phi.clone();
        for col in phi.chunks_mut(nw) {
            col.reverse();
        }
        Ok(KineticState {
            phi,
            ..self.clone()
        })
    }

    fn require_symmetric(&self) -> Result<()> {
        if self.w.is_symmetric() {
            Ok(())
        } else {
            Err(Error::Precondition(
                "reflection needs a velocity grid symmetric about 0".into(),
            ))
        }
    }
}

/// `phi = shape(f)` from samples `f_values[ix][iw] = f(w_iw, x_ix)`.
pub fn init_from_map(
    w: VelocityGrid,
    x: PeriodicGrid,
    f_values: &[Vec<Complex64>],
    shape: &Shape,
) -> Result<KineticState> {
    if f_values.len() != x.n || f_values.iter().any(|c| c.len() != w.n) {
        return Err(Error::Precondition(
            "map samples do not match the grids".into(),
        ));
    }
    let mut phi = Vec::with_capacity(w.n * x.n);
    for col in f_values {
        for f in col {
            let v = match shape {
                Shape::Gaussian => {
                    let f2 = f * f;
                    if f2.im.abs() > 1e-8 * f2.re.abs().max(1.0) {
                        return Err(Error::Precondition(format!("f^2 = {f2} is not real")));
                    }
                    (-f2.re).exp()
                }
                Shape::Custom(g) => {
                    if f.im.abs() > 1e-8 * f.re.abs().max(1.0) {
                        return Err(Error::Precondition(format!("f = {f} is not real")));
                    }
                    g(f.re)
                }
            };
            phi.push(v);
        }
    }
    let state = KineticState::new(w, x, phi, 0.0)?;
    if !state.decayed() {
        return Err(Error::Domain(format!(
            "distribution is {:e} at the velocity edges; widen the w-window",
            state.edge_max()
        )));
    }
    Ok(state)
}

// Four-point Lagrange weights for offsets -1, 0, 1, 2 at fractional position t.
fn lagrange4(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Caches the spectral operator for repeated steps on one grid.
#[derive(Clone, Debug)]
pub struct KineticSolver {
    spectral: Spectral,
}

impl KineticSolver {
    pub fn new(x: PeriodicGrid) -> Self {
        KineticSolver {
            spectral: Spectral::new(x),
        }
    }

    pub fn force(&self, state: &KineticState) -> Vec<f64> {
        self.spectral.derivative(&state.a0())
    }

    /// Kick-limited default: `0.25 dw / max|A^0_x|`.
    pub fn default_ds(&self, state: &KineticState) -> f64 {
        let fmax = self.force(state).iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if fmax == 0.0 {
            0.25 * state.x.dx()
        } else {
            0.25 * state.w.dw / fmax
        }
    }

    fn stream(&self, state: &KineticState, ds: f64) -> Vec<f64> {
        let (nx, nw) = (state.x.n, state.w.n);
        let dx = state.x.dx();
        // Foot x - w ds, per velocity row.
        let stencils: Vec<(i64, [f64; 4])> = (0..nw)
            .map(|iw| {
                let p = -state.w.w(iw) * ds / dx;
                let i0 = p.floor();
                (i0 as i64, lagrange4(p - i0))
            })
            .collect();
        let mut out = vec![0.0; nx * nw];
        out.par_chunks_mut(nw).enumerate().for_each(|(ix, col)| {
            for (iw, v) in col.iter_mut().enumerate() {
                let (i0, c) = stencils[iw];
                let mut acc = 0.0;
                for (k, ck) in c.iter().enumerate() {
                    let j = (ix as i64 + i0 + k as i64 - 1).rem_euclid(nx as i64) as usize;
                    acc += ck * state.phi[j * nw + iw];
                }
                *v = acc;
            }
        });
        // Clamp undershoots, then restore each velocity row's sum.
        let scale: Vec<f64> = (0..nw)
            .map(|iw| {
                let (mut total, mut positive) = (0.0, 0.0);
                for ix in 0..nx {
                    let v = out[ix * nw + iw];
                    total += v;
                    positive += v.max(0.0);
                }
                if positive > 0.0 && total > 0.0 {
                    total / positive
                } else {
                    0.0
                }
            })
            .collect();
        out.par_chunks_mut(nw).for_each(|col| {
            for (v, f) in col.iter_mut().zip(&scale) {
                *v = v.max(0.0) * f;
            }
        });
        out
    }

    fn kick(&self, phi: &[f64], state: &KineticState, force: &[f64], ds: f64) -> Vec<f64> {
        let nw = state.w.n;
        let dw = state.w.dw;
        let mut out = vec![0.0; phi.len()];
        out.par_chunks_mut(nw).enumerate().for_each(|(ix, col)| {
            // Foot w + A^0_x ds.
            let p = force[ix] * ds / dw;
            let i0 = p.floor();
            let c = lagrange4(p - i0);
            let i0 = i0 as i64;
            let src = &phi[ix * nw..(ix + 1) * nw];
            for (iw, v) in col.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (k, ck) in c.iter().enumerate() {
                    let j = iw as i64 + i0 + k as i64 - 1;
                    if j >= 0 && (j as usize) < nw {
                        acc += ck * src[j as usize];
                    }
                }
                *v = acc;
            }
            let total: f64 = col.iter().sum();
            let positive: f64 = col.iter().map(|v| v.max(0.0)).sum();
            let f = if positive > 0.0 && total > 0.0 {
                total / positive
            } else {
                0.0
            };
            col.iter_mut().for_each(|v| *v = v.max(0.0) * f);
        });
        out
    }

    pub fn step(&self, state: &KineticState, ds: f64) -> Result<KineticState> {
        if !(ds.is_finite() && ds != 0.0) {
            return Err(Error::Step(format!("invalid step {ds}")));
        }
        let half = KineticState {
            phi: self.stream(state, 0.5 * ds),
            ..state.clone()
        };
        let force = self.force(&half);
        let fmax = force.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if fmax * ds.abs() > state.w.dw {
            return Err(Error::Step(format!(
                "velocity kick {:e} exceeds one cell ({:e}); reduce ds below {:e}",
                fmax * ds.abs(),
                state.w.dw,
                state.w.dw / fmax
            )));
        }
        let kicked = KineticState {
            phi: self.kick(&half.phi, state, &force, ds),
            ..state.clone()
        };
        Ok(KineticState {
            phi: self.stream(&kicked, 0.5 * ds),
            s: state.s + ds,
            ..state.clone()
        })
    }

    /// `steps` steps of size `ds`, recording moments `0..=order` every
    /// `record_every` steps (and at the start).
    pub fn evolve(
        &self,
        state: &KineticState,
        ds: f64,
        steps: usize,
        record_every: usize,
        order: usize,
    ) -> Result<(KineticState, MomentHistory)> {
        let record_every = record_every.max(1);
        let mut cur = state.clone();
        let mut hist = MomentHistory {
            s: vec![cur.s],
            fields: vec![moments(&cur, order)],
        };
        for k in 1..=steps {
            cur = self.step(&cur, ds)?;
            if k % record_every == 0 {
                hist.s.push(cur.s);
                hist.fields.push(moments(&cur, order));
            }
        }
        Ok((cur, hist))
    }
}

pub fn step(state: &KineticState, ds: f64) -> Result<KineticState> {
    KineticSolver::new(state.x).step(state, ds)
}

/// Trapezoid moments `A^n(x) = int w^n phi dw`, `n = 0..=order`.
pub fn moments(state: &KineticState, order: usize) -> MomentField {
    let (nx, nw) = (state.x.n, state.w.n);
    let mut a = vec![vec![0.0; nx]; order + 1];
    for ix in 0..nx {
        let col = state.column(ix);
        for iw in 0..nw {
            let base = col[iw] * state.w.weight(iw);
            if base == 0.0 {
                continue;
            }
            let w = state.w.w(iw);
            let mut p = base;
            for row in a.iter_mut() {
                row[ix] += p;
                p *= w;
            }
        }
    }
    let mut field = MomentField::new(state.x, a);
    field.decay_warning = !state.decayed();
    field
}

/// Moment fields at equally spaced times.
#[derive(Clone, Debug)]
pub struct MomentHistory {
    pub s: Vec<f64>,
    pub fields: Vec<MomentField>,
}

#[derive(Clone, Debug)]
pub struct BenneyResidual {
    /// `values[j][n][x]` for interior slices `j = 1..len-1`.
    pub values: Vec<Vec<Vec<f64>>>,
    pub max: f64,
    pub max_per_row: Vec<f64>,
}

/// Centered-difference residual of `A^n_s + A^{n+1}_x + n A^{n-1} A^0_x` for
/// rows `0..N-1`.
pub fn benney_residual(history: &MomentHistory) -> Result<BenneyResidual> {
    let m = history.fields.len();
    if m < 3 {
        return Err(Error::Precondition(
            "need at least three time slices".into(),
        ));
    }
    let ds = history.s[1] - history.s[0];
    if history
        .s
        .windows(2)
        .any(|w| ((w[1] - w[0]) - ds).abs() > 1e-9 * ds.abs().max(1e-300))
    {
        return Err(Error::Precondition(
            "time slices must be equally spaced".into(),
        ));
    }
    let order = history.fields[0].order();
    if order == 0 {
        return Err(Error::Precondition("need at least two moment rows".into()));
    }
    let grid = history.fields[0].grid;
    let mut values = Vec::new();
    let mut max_per_row = vec![0.0f64; order];
    for j in 1..m - 1 {
        let (prev, cur, next) = (
            &history.fields[j - 1],
            &history.fields[j],
            &history.fields[j + 1],
        );
        let a0x = grid.dx_central(&cur.a[0]);
        let mut slice = Vec::with_capacity(order);
        for n in 0..order {
            let flux = grid.dx_central(&cur.a[n + 1]);
            let row: Vec<f64> = (0..grid.n)
                .map(|i| {
                    let dt = (next.a[n][i] - prev.a[n][i]) / (2.0 * ds);
                    let lower = if n > 0 {
                        n as f64 * cur.a[n - 1][i] * a0x[i]
                    } else {
                        0.0
                    };
                    dt + flux[i] + lower
                })
                .collect();
            let rmax = row.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            max_per_row[n] = max_per_row[n].max(rmax);
            slice.push(row);
        }
        values.push(slice);
    }
    let max = max_per_row.iter().cloned().fold(0.0, f64::max);
    Ok(BenneyResidual {
        values,
        max,
        max_per_row,
    })
}

fn require_upper(z_points: &[Complex64]) -> Result<()> {
    match z_points.iter().find(|z| !(z.im > 0.0)) {
        Some(z) => Err(Error::Domain(format!(
            "Cauchy transform needs Im z > 0, got {z}"
        ))),
        None => Ok(()),
    }
}

/// `lambda(z, x) = z + int phi(w, x) / (z - w) dw`; result indexed `[z][x]`.
pub fn cauchy_lambda(state: &KineticState, z_points: &[Complex64]) -> Result<Vec<Vec<Complex64>>> {
    require_upper(z_points)?;
    Ok(z_points
        .iter()
        .map(|&z| {
            cauchy_kernel_sum(state, z, 1)
                .into_iter()
                .map(|v| z + v)
                .collect()
        })
        .collect())
}

// sum_i phi_i weight_i / (z - w_i)^power, per x.
fn cauchy_kernel_sum(state: &KineticState, z: Complex64, power: i32) -> Vec<Complex64> {
    let kernel: Vec<Complex64> = (0..state.w.n)
        .map(|i| state.w.weight(i) / (z - state.w.w(i)).powi(power))
        .collect();
    (0..state.x.n)
        .map(|ix| {
            state
                .column(ix)
                .iter()
                .zip(&kernel)
                .map(|(p, k)| k * p)
                .sum()
        })
        .collect()
}

/// `lambda_s + z lambda_x - A^0_x lambda_z` at the middle state, with a
/// centered difference in `s`, spectral `x` derivatives and the exact
/// `z` derivative of the transform.
pub fn vlasov_residual(
    prev: &KineticState,
    cur: &KineticState,
    next: &KineticState,
    z_points: &[Complex64],
) -> Result<ResidualReport> {
    require_upper(z_points)?;
    let ds = 0.5 * (next.s - prev.s);
    if !(ds > 0.0) || ((cur.s - prev.s) - ds).abs() > 1e-9 * ds {
        return Err(Error::Precondition(
            "states must be equally spaced in s".into(),
        ));
    }
    let sp = Spectral::new(cur.x);
    let a0x = sp.derivative(&cur.a0());
    let mut values = Vec::new();
    for &z in z_points {
        let lp = cauchy_kernel_sum(prev, z, 1);
        let ln = cauchy_kernel_sum(next, z, 1);
        let lc = cauchy_kernel_sum(cur, z, 1);
        let dre = sp.derivative(&lc.iter().map(|c| c.re).collect::<Vec<_>>());
        let dim = sp.derivative(&lc.iter().map(|c| c.im).collect::<Vec<_>>());
        let lz = cauchy_kernel_sum(cur, z, 2);
        for ix in 0..cur.x.n {
            let ls = (ln[ix] - lp[ix]) / (2.0 * ds);
            let lx = Complex64::new(dre[ix], dim[ix]);
            let lam_z = Complex64::new(1.0, 0.0) - lz[ix];
            values.push((ls + z * lx - a0x[ix] * lam_z).norm());
        }
    }
    Ok(ResidualReport::from_values("vlasov", cur.x.n, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian_state(nx: usize, nw: usize, f: impl Fn(f64, f64) -> f64) -> KineticState {
        KineticState::from_fn(
            VelocityGrid::symmetric(8.0, nw),
            PeriodicGrid::standard(nx),
            f,
        )
        .unwrap()
    }

    #[test]
    fn gaussian_moments() {
        let st = gaussian_state(8, 161, |w, _| (-w * w).exp());
        let m = moments(&st, 4);
        let sp = PI.sqrt();
        for j in 0..8 {
            assert!((m.a[0][j] - sp).abs() < 1e-12);
            assert!(m.a[1][j].abs() < 1e-12);
            assert!((m.a[2][j] - sp / 2.0).abs() < 1e-12);
            assert!((m.a[4][j] - 0.75 * sp).abs() < 1e-12);
        }
        let shifted = gaussian_state(4, 161, |w, _| (-(w - 1.0) * (w - 1.0)).exp());
        let m = moments(&shifted, 1);
        assert!((m.a[1][0] / m.a[0][0] - 1.0).abs() < 1e-12);
        let zero = gaussian_state(4, 16, |_, _| 0.0);
        assert!(moments(&zero, 3).a.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn free_streaming_of_uniform_state() {
        let st = gaussian_state(16, 129, |w, _| (-w * w).exp());
        let solver = KineticSolver::new(st.x);
        let mut cur = st.clone();
        for _ in 0..10 {
            cur = solver.step(&cur, 0.1).unwrap();
        }
        for (a, b) in cur.values().iter().zip(st.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let zero = gaussian_state(8, 16, |_, _| 0.0);
        assert!(solver_for(&zero)
            .step(&zero, 0.3)
            .unwrap()
            .values()
            .iter()
            .all(|v| *v == 0.0));
    }

    fn solver_for(st: &KineticState) -> KineticSolver {
        KineticSolver::new(st.x)
    }

    #[test]
    fn mass_conserved_and_positive() {
        let st = gaussian_state(64, 129, |w, x| {
            (1.0 + 0.3 * x.cos()) * (-(w - 0.5 * x.sin()).powi(2)).exp()
        });
        let solver = solver_for(&st);
        let m0 = st.mass();
        let ds = solver.default_ds(&st).min(0.05);
        let mut cur = st;
        for _ in 0..40 {
            let next = solver.step(&cur, ds).unwrap();
            assert!((next.mass() - cur.mass()).abs() < 1e-8);
            cur = next;
        }
        assert!((cur.mass() - m0).abs() < 1e-6);
        assert!(cur.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn oversized_kick_is_rejected() {
        let st = gaussian_state(32, 65, |w, x| (1.0 + 0.5 * x.cos()) * (-w * w).exp());
        let solver = solver_for(&st);
        let limit = st.w.dw / solver.force(&st).iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(matches!(solver.step(&st, 3.0 * limit), Err(Error::Step(_))));
    }

    #[test]
    fn parity_commutes_with_evolution() {
        let st = gaussian_state(64, 129, |w, x| {
            (1.0 + 0.2 * x.cos() + 0.1 * (2.0 * x).sin())
                * (-(w - 0.3 * x.sin() - 0.2).powi(2)).exp()
        });
        let solver = solver_for(&st);
        let (mut a, mut b) = (st.clone(), st.reflected().unwrap());
        for _ in 0..20 {
            a = solver.step(&a, 0.05).unwrap();
            b = solver.step(&b, 0.05).unwrap();
        }
        let ar = a.reflected().unwrap();
        let diff = ar
            .values()
            .iter()
            .zip(b.values())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn velocity_reversal_runs_backward() {
        let st = gaussian_state(64, 129, |w, x| {
            (1.0 + 0.2 * x.cos()) * (-(w - 0.3 * x.sin()).powi(2)).exp()
        });
        let solver = solver_for(&st);
        let mut cur = st.clone();
        for _ in 0..20 {
            cur = solver.step(&cur, 0.05).unwrap();
        }
        let mut back = cur.velocity_reversed().unwrap();
        for _ in 0..20 {
            back = solver.step(&back, 0.05).unwrap();
        }
        let back = back.velocity_reversed().unwrap();
        let diff = back
            .values()
            .iter()
            .zip(st.values())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-3, "{diff}");
    }

    #[test]
    fn cauchy_transform_matches_moment_expansion() {
        let st = gaussian_state(4, 321, |w, _| (-w * w).exp());
        let z = Complex64::new(0.0, 10.0);
        let lam = cauchy_lambda(&st, &[z]).unwrap();
        let m = moments(&st, 14);
        let series: Complex64 = (0..=14).map(|n| m.a[n][0] / z.powi(n as i32 + 1)).sum();
        assert!((lam[0][0] - z - series).norm() < 1e-10);
        let two_terms = PI.sqrt() / z + (PI.sqrt() / 2.0) / z.powi(3);
        // the fourth moment contributes 3 sqrt(pi)/4 / 10^5 ~ 1.3e-5
        assert!((lam[0][0] - z - two_terms).norm() < 2e-5);
        assert!(cauchy_lambda(&st, &[Complex64::new(1.0, 0.0)]).is_err());
        let zero = gaussian_state(4, 16, |_, _| 0.0);
        assert_eq!(cauchy_lambda(&zero, &[z]).unwrap()[0][0], z);
    }

    #[test]
    fn benney_residual_of_uniform_state_vanishes() {
        let st = gaussian_state(16, 129, |w, _| (-w * w).exp());
        let solver = solver_for(&st);
        let (_, hist) = solver.evolve(&st, 0.1, 4, 1, 4).unwrap();
        let r = benney_residual(&hist).unwrap();
        assert!(r.max < 1e-13);
        assert_eq!(r.max_per_row.len(), 4);
        let short = MomentHistory {
            s: hist.s[..2].to_vec(),
            fields: hist.fields[..2].to_vec(),
        };
        assert!(matches!(
            benney_residual(&short),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn init_from_identity_and_shifted_maps() {
        let w = VelocityGrid::symmetric(8.0, 65);
        let x = PeriodicGrid::standard(8);
        let id: Vec<Vec<Complex64>> = (0..8)
            .map(|_| w.points().iter().map(|v| Complex64::new(*v, 0.0)).collect())
            .collect();
        let st = init_from_map(w, x, &id, &Shape::Gaussian).unwrap();
        assert_eq!(st.phi(3, 10), (-w.w(10) * w.w(10)).exp());
        let shifted: Vec<Vec<Complex64>> = (0..8)
            .map(|ix| {
                w.points()
                    .iter()
                    .map(|v| Complex64::new(v - 0.5 * x.x(ix).sin(), 0.0))
                    .collect()
            })
            .collect();
        let st = init_from_map(w, x, &shifted, &Shape::Gaussian).unwrap();
        let c = 0.5 * x.x(2).sin();
        assert!((st.phi(2, 40) - (-(w.w(40) - c).powi(2)).exp()).abs() < 1e-15);
        let narrow = VelocityGrid::symmetric(2.0, 65);
        let id: Vec<Vec<Complex64>> = (0..8)
            .map(|_| {
                narrow
                    .points()
                    .iter()
                    .map(|v| Complex64::new(*v, 0.0))
                    .collect()
            })
            .collect();
        assert!(matches!(
            init_from_map(narrow, x, &id, &Shape::Gaussian),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn vertical_slit_boundary_values() {
        // f(w, t) = sqrt(w^2 - 4t) is imaginary on the slit but f^2 stays real,
        // so exp(-f^2) = exp(-w^2 + 4t) with mass sqrt(pi) e^{4t}.
        let t = 0.05;
        let w = VelocityGrid::symmetric(9.0, 401);
        let x = PeriodicGrid::standard(4);
        let f: Vec<Vec<Complex64>> = (0..4)
            .map(|_| {
                w.points()
                    .iter()
                    .map(|v| Complex64::new(v * v - 4.0 * t, 0.0).sqrt())
                    .collect()
            })
            .collect();
        let st = init_from_map(w, x, &f, &Shape::Gaussian).unwrap();
        let m = moments(&st, 2);
        assert!((m.a[0][0] - PI.sqrt() * (4.0 * t).exp()).abs() < 1e-8);
        assert!(m.a[1][0].abs() < 1e-12);
        let cut = Shape::Custom(Arc::new(|f: f64| (-f * f).exp()));
        assert!(matches!(
            init_from_map(w, x, &f, &cut),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn auto_window_covers_decay() {
        let x = PeriodicGrid::standard(8);
        let g = VelocityGrid::auto(&|w: f64, _| (-w * w).exp(), &x, 64).unwrap();
        // exp(-w^2) = 1e-12 at |w| ~ 5.26
        assert!(g.min < -7.8 && g.min > -8.1);
    }
}
