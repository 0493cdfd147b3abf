use crate::error::{Error, Result};
use crate::field::{PeriodicGrid, Spectral};

use super::flows::{CentralDx, XDerivative};

/// Samples `u(x, s, y)` on a uniform grid, stored `values[is][iy][ix]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    pub dx: f64,
    pub ds: f64,
    pub dy: f64,
    /// Periodic `x` uses spectral derivatives, otherwise centered differences.
    pub periodic_x: bool,
    pub values: Vec<Vec<Vec<f64>>>,
}

enum Dx {
    Spectral(Spectral),
    Central(CentralDx),
}

impl Dx {
    fn apply(&self, f: &[f64]) -> Vec<f64> {
        match self {
            Dx::Spectral(s) => s.derivative(f),
            Dx::Central(c) => c.dx(f),
        }
    }
}

impl SpaceTimeField {
    pub fn from_fn(
        x: &[f64],
        s: &[f64],
        y: &[f64],
        periodic_x: bool,
        f: impl Fn(f64, f64, f64) -> f64,
    ) -> Result<Self> {
        let step = |v: &[f64]| if v.len() >= 2 { v[1] - v[0] } else { 0.0 };
        let field = SpaceTimeField {
            dx: step(x),
            ds: step(s),
            dy: step(y),
            periodic_x,
            values: s
                .iter()
                .map(|&sv| {
                    y.iter()
                        .map(|&yv| x.iter().map(|&xv| f(xv, sv, yv)).collect())
                        .collect()
                })
                .collect(),
        };
        field.validate()?;
        Ok(field)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        let ns = self.values.len();
        let ny = self.values.first().map_or(0, |v| v.len());
        let nx = self
            .values
            .first()
            .and_then(|v| v.first())
            .map_or(0, |v| v.len());
        (ns, ny, nx)
    }

    fn validate(&self) -> Result<()> {
        let (ns, ny, nx) = self.shape();
        if ns < 3 || ny < 3 || nx < 3 {
            return Err(Error::Precondition(format!(
                "need at least 3 points per axis, got (s, y, x) = ({ns}, {ny}, {nx})"
            )));
        }
        if self
            .values
            .iter()
            .any(|p| p.len() != ny || p.iter().any(|r| r.len() != nx))
        {
            return Err(Error::Precondition("ragged space-time samples".into()));
        }
        if !(self.dx > 0.0 && self.ds > 0.0 && self.dy > 0.0) {
            return Err(Error::Precondition("grid spacings must be positive".into()));
        }
        Ok(())
    }

    fn dx_op(&self) -> Dx {
        let nx = self.shape().2;
        if self.periodic_x {
            Dx::Spectral(Spectral::new(PeriodicGrid::new(nx, nx as f64 * self.dx)))
        } else {
            Dx::Central(CentralDx {
                h: self.dx,
                periodic: false,
            })
        }
    }

    /// The x-derivative used by the residual operators on this grid.
    pub fn x_derivative(&self) -> impl Fn(&[f64]) -> Vec<f64> {
        let d = self.dx_op();
        move |f| d.apply(f)
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.shape() == other.shape()
            && self.periodic_x == other.periodic_x
            && [
                (self.dx, other.dx),
                (self.ds, other.ds),
                (self.dy, other.dy),
            ]
            .iter()
            .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()))
    }
}

/// Residuals on interior `(s, y)` nodes, indexed `[is-1][iy-1][ix]`.
pub type Interior = Vec<Vec<Vec<f64>>>;

/// `u_ss + (u_y + u u_x)_x` on interior `(s, y)` nodes.
pub fn zk_residual(u: &SpaceTimeField) -> Result<Interior> {
    u.validate()?;
    let (ns, ny, _) = u.shape();
    let d = u.dx_op();
    let v = &u.values;
    Ok((1..ns - 1)
        .map(|is| {
            (1..ny - 1)
                .map(|iy| {
                    let c = &v[is][iy];
                    let ux = d.apply(c);
                    let flux: Vec<f64> = (0..c.len())
                        .map(|i| {
                            (v[is][iy + 1][i] - v[is][iy - 1][i]) / (2.0 * u.dy) + c[i] * ux[i]
                        })
                        .collect();
                    let fx = d.apply(&flux);
                    (0..c.len())
                        .map(|i| {
                            (v[is + 1][iy][i] - 2.0 * c[i] + v[is - 1][iy][i]) / (u.ds * u.ds)
                                + fx[i]
                        })
                        .collect()
                })
                .collect()
        })
        .collect())
}

/// Residuals of `H_s + (G + H^2/2)_x = 0` and `G_s - H_y - (G H + H^3/3)_x = 0`
/// with `H = H^{-1}`, `G = H^0`.
pub fn mdkp_residual(hm1: &SpaceTimeField, h0: &SpaceTimeField) -> Result<(Interior, Interior)> {
    hm1.validate()?;
    h0.validate()?;
    if !hm1.same_grid(h0) {
        return Err(Error::Precondition(
            "H^-1 and H^0 must share one grid".into(),
        ));
    }
    let (ns, ny, nx) = hm1.shape();
    let d = hm1.dx_op();
    let (h, g) = (&hm1.values, &h0.values);
    let mut first = Vec::with_capacity(ns - 2);
    let mut second = Vec::with_capacity(ns - 2);
    for is in 1..ns - 1 {
        let mut r1 = Vec::with_capacity(ny - 2);
        let mut r2 = Vec::with_capacity(ny - 2);
        for iy in 1..ny - 1 {
            let (hc, gc) = (&h[is][iy], &g[is][iy]);
            let f1: Vec<f64> = (0..nx).map(|i| gc[i] + 0.5 * hc[i] * hc[i]).collect();
            let f2: Vec<f64> = (0..nx)
                .map(|i| gc[i] * hc[i] + hc[i].powi(3) / 3.0)
                .collect();
            let (f1x, f2x) = (d.apply(&f1), d.apply(&f2));
            r1.push(
                (0..nx)
                    .map(|i| (h[is + 1][iy][i] - h[is - 1][iy][i]) / (2.0 * hm1.ds) + f1x[i])
                    .collect(),
            );
            r2.push(
                (0..nx)
                    .map(|i| {
                        (g[is + 1][iy][i] - g[is - 1][iy][i]) / (2.0 * hm1.ds)
                            - (h[is][iy + 1][i] - h[is][iy - 1][i]) / (2.0 * hm1.dy)
                            - f2x[i]
                    })
                    .collect(),
            );
        }
        first.push(r1);
        second.push(r2);
    }
    Ok((first, second))
}
