use crate::error::{Error, Result};
use crate::field::{PeriodicGrid, Spectral};
use crate::hierarchy::SpaceTimeField;
use crate::ode::rk4_step;

/// Cold-plasma fields `eta(x, s, y)`, `v(x, s, y)` on a periodic `x` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ColdPlasmaSheet {
    pub eta: SpaceTimeField,
    pub v: SpaceTimeField,
}

impl ColdPlasmaSheet {
    /// `H^{-1}`: the root of `z^2 - v z + eta = 0` nearer zero (needs `v^2 > 4 eta`).
    pub fn h_minus_one(&self) -> Result<SpaceTimeField> {
        let mut out = self.eta.clone();
        for (is, plane) in out.values.iter_mut().enumerate() {
            for (iy, row) in plane.iter_mut().enumerate() {
                for (ix, val) in row.iter_mut().enumerate() {
                    let (e, v) = (self.eta.values[is][iy][ix], self.v.values[is][iy][ix]);
                    let disc = v * v - 4.0 * e;
                    if disc <= 0.0 {
                        return Err(Error::Domain(format!(
                            "H^-1 needs v^2 > 4 eta, got v = {v}, eta = {eta}",
                            eta = e
                        )));
                    }
                    *val = 0.5 * (v - v.signum() * disc.sqrt());
                }
            }
        }
        Ok(out)
    }

    /// `H^1 = eta v`, the potential `v` of the reduction.
    pub fn h_one(&self) -> SpaceTimeField {
        let mut out = self.eta.clone();
        for (is, plane) in out.values.iter_mut().enumerate() {
            for (iy, row) in plane.iter_mut().enumerate() {
                for (ix, val) in row.iter_mut().enumerate() {
                    *val *= self.v.values[is][iy][ix];
                }
            }
        }
        out
    }
}

/// Flows `r_s = -mu r_x` and `r_y = -(mu^2 + eta) r_x` of `r+- = v +- 2 sqrt(eta)`.
fn flow_rhs(sp: &Spectral, y: &[f64], commuting: bool) -> Result<Vec<f64>> {
    let n = y.len() / 2;
    let (rp, rm) = y.split_at(n);
    let (dp, dm) = (sp.derivative(rp), sp.derivative(rm));
    let mut out = vec![0.0; 2 * n];
    for j in 0..n {
        let c = 0.25 * (rp[j] - rm[j]);
        if !(c > 0.0) {
            return Err(Error::Domain("cold plasma needs r+ > r-".into()));
        }
        let v = 0.5 * (rp[j] + rm[j]);
        let (mp, mm) = (v + c, v - c);
        let (sp_, sm_) = if commuting {
            (mp * mp + c * c, mm * mm + c * c)
        } else {
            (mp, mm)
        };
        out[j] = -sp_ * dp[j];
        out[n + j] = -sm_ * dm[j];
    }
    Ok(out)
}

fn advance(sp: &Spectral, y: &[f64], span: f64, dt_max: f64, commuting: bool) -> Result<Vec<f64>> {
    if span == 0.0 {
        return Ok(y.to_vec());
    }
    let steps = (span.abs() / dt_max).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let mut f = |y: &[f64]| flow_rhs(sp, y, commuting);
    let mut cur = y.to_vec();
    for _ in 0..steps {
        cur = rk4_step(&mut f, &cur, h)?;
    }
    Ok(cur)
}

/// Evolves cold-plasma data along both commuting flows, spectral in `x`, RK4 in `s` and `y`.
///
/// `s` and `y` are uniform increasing axes; the data at `(0, 0)` is `(eta0, v0)`.
pub fn cold_plasma_sheet(
    grid: PeriodicGrid,
    eta0: &[f64],
    v0: &[f64],
    s: &[f64],
    y: &[f64],
    dt_max: f64,
) -> Result<ColdPlasmaSheet> {
    let n = grid.n;
    if eta0.len() != n || v0.len() != n || !(dt_max > 0.0) {
        return Err(Error::Precondition(
            "initial rows must match the grid and dt_max > 0".into(),
        ));
    }
    let sp = Spectral::new(grid);
    let mut state: Vec<f64> = (0..n)
        .map(|j| v0[j] + 2.0 * eta0[j].max(0.0).sqrt())
        .chain((0..n).map(|j| v0[j] - 2.0 * eta0[j].max(0.0).sqrt()))
        .collect();
    let mut eta = vec![vec![vec![0.0; n]; y.len()]; s.len()];
    let mut vel = eta.clone();
    let mut y_prev = 0.0;
    for (iy, &yv) in y.iter().enumerate() {
        state = advance(&sp, &state, yv - y_prev, dt_max, true)?;
        y_prev = yv;
        let mut cur = state.clone();
        let mut s_prev = 0.0;
        for (is, &sv) in s.iter().enumerate() {
            cur = advance(&sp, &cur, sv - s_prev, dt_max, false)?;
            s_prev = sv;
            for j in 0..n {
                let (p, m) = (cur[j], cur[n + j]);
                eta[is][iy][j] = (0.25 * (p - m)).powi(2);
                vel[is][iy][j] = 0.5 * (p + m);
            }
        }
    }
    let xs = grid.points();
    let wrap = |values| -> Result<SpaceTimeField> {
        let mut f = SpaceTimeField::from_fn(&xs, s, y, true, |_, _, _| 0.0)?;
        f.values = values;
        Ok(f)
    };
    Ok(ColdPlasmaSheet {
        eta: wrap(eta)?,
        v: wrap(vel)?,
    })
}
