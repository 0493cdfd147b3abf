use crate::error::{Error, Result};
use crate::faber::faber_all;
use crate::hierarchy::{Interior, SpaceTimeField};

fn same_grid(fields: &[&SpaceTimeField]) -> Result<()> {
    let first = fields[0];
    for f in &fields[1..] {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if f.shape() != first.shape()
            || f.periodic_x != first.periodic_x
            || !close(f.dx, first.dx)
            || !close(f.ds, first.ds)
            || !close(f.dy, first.dy)
        {
            return Err(Error::Precondition(
                "fields must share one (x, s, y) grid".into(),
            ));
        }
    }
    let (ns, ny, nx) = first.shape();
    if ns < 3 || ny < 3 || nx < 3 {
        return Err(Error::Precondition(
            "need at least 3 points per axis".into(),
        ));
    }
    Ok(())
}

fn ds(f: &SpaceTimeField, is: usize, iy: usize, ix: usize) -> f64 {
    (f.values[is + 1][iy][ix] - f.values[is - 1][iy][ix]) / (2.0 * f.ds)
}

fn dy(f: &SpaceTimeField, is: usize, iy: usize, ix: usize) -> f64 {
    (f.values[is][iy + 1][ix] - f.values[is][iy - 1][ix]) / (2.0 * f.dy)
}

/// Applies `op(is, iy) -> row` over interior `(s, y)` nodes.
fn interior(f: &SpaceTimeField, mut op: impl FnMut(usize, usize) -> Vec<f64>) -> Interior {
    let (ns, ny, _) = f.shape();
    (1..ns - 1)
        .map(|is| (1..ny - 1).map(|iy| op(is, iy)).collect())
        .collect()
}

/// `z_s + (z^2/2 + u)_x` and `z_y + (z^3/3 + u z + v)_x`.
pub fn conservation_pair_residual(
    u: &SpaceTimeField,
    v: &SpaceTimeField,
    z: &SpaceTimeField,
) -> Result<(Interior, Interior)> {
    same_grid(&[u, v, z])?;
    let d = u.x_derivative();
    let first = interior(z, |is, iy| {
        let (zr, ur) = (&z.values[is][iy], &u.values[is][iy]);
        let flux: Vec<f64> = zr.iter().zip(ur).map(|(z, u)| 0.5 * z * z + u).collect();
        let fx = d(&flux);
        (0..zr.len()).map(|i| ds(z, is, iy, i) + fx[i]).collect()
    });
    let second = interior(z, |is, iy| {
        let (zr, ur, vr) = (&z.values[is][iy], &u.values[is][iy], &v.values[is][iy]);
        let flux: Vec<f64> = (0..zr.len())
            .map(|i| zr[i].powi(3) / 3.0 + ur[i] * zr[i] + vr[i])
            .collect();
        let fx = d(&flux);
        (0..zr.len()).map(|i| dy(z, is, iy, i) + fx[i]).collect()
    });
    Ok((first, second))
}

/// `v_x + u_s` and `v_s - u_y - u u_x`.
pub fn dkp_residual(u: &SpaceTimeField, v: &SpaceTimeField) -> Result<(Interior, Interior)> {
    same_grid(&[u, v])?;
    let d = u.x_derivative();
    let first = interior(u, |is, iy| {
        let vx = d(&v.values[is][iy]);
        (0..vx.len()).map(|i| vx[i] + ds(u, is, iy, i)).collect()
    });
    let second = interior(u, |is, iy| {
        let ur = &u.values[is][iy];
        let ux = d(ur);
        (0..ur.len())
            .map(|i| ds(v, is, iy, i) - dy(u, is, iy, i) - ur[i] * ux[i])
            .collect()
    });
    Ok((first, second))
}

/// Vertex flow `d_{t_n} z = d_x Phi_{n+1}(z) / (n+1)` with `x = t_0`, `s = -t_1`, `y = -t_2`,
/// reported as `z_tau + d_x Phi_{n+1}(z) / (n+1)` for `tau = s, y`.
///
/// `Phi` is built from `b_1 = -u`, `b_2 = -v` (`u = H^0`, `v = H^1`).
pub fn vertex_flows(
    z: &SpaceTimeField,
    u: &SpaceTimeField,
    v: &SpaceTimeField,
    n: usize,
) -> Result<Interior> {
    if n > 2 {
        return Err(Error::OutOfScope(format!(
            "vertex flow t_{n}: only t_0, t_1, t_2 are supported"
        )));
    }
    same_grid(&[z, u, v])?;
    if n == 0 {
        return Ok(interior(z, |is, iy| vec![0.0; z.values[is][iy].len()]));
    }
    let d = z.x_derivative();
    let mut err = None;
    let out = interior(z, |is, iy| {
        let (zr, ur, vr) = (&z.values[is][iy], &u.values[is][iy], &v.values[is][iy]);
        let mut phi = Vec::with_capacity(zr.len());
        for i in 0..zr.len() {
            match faber_all(&[-ur[i], -vr[i], 0.0], n + 1) {
                Ok(f) => phi.push(f[n + 1].eval(zr[i]) / (n + 1) as f64),
                Err(e) => {
                    err.get_or_insert(e);
                    phi.push(f64::NAN);
                }
            }
        }
        let px = d(&phi);
        (0..zr.len())
            .map(|i| {
                let dt = if n == 1 {
                    ds(z, is, iy, i)
                } else {
                    dy(z, is, iy, i)
                };
                dt + px[i]
            })
            .collect()
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Shifted conservation laws for `zt = z - H`, `H = H^{-1}`, `G = H^0`:
/// `zt_s + (zt^2/2 + H zt)_x` and `zt_y + (zt^3/3 + H zt^2 + (G + H^2) zt)_x`.
pub fn dist_residual(
    zt: &SpaceTimeField,
    hm1: &SpaceTimeField,
    h0: &SpaceTimeField,
) -> Result<(Interior, Interior)> {
    same_grid(&[zt, hm1, h0])?;
    let d = zt.x_derivative();
    let first = interior(zt, |is, iy| {
        let (w, h) = (&zt.values[is][iy], &hm1.values[is][iy]);
        let flux: Vec<f64> = (0..w.len())
            .map(|i| 0.5 * w[i] * w[i] + h[i] * w[i])
            .collect();
        let fx = d(&flux);
        (0..w.len()).map(|i| ds(zt, is, iy, i) + fx[i]).collect()
    });
    let second = interior(zt, |is, iy| {
        let (w, h, g) = (&zt.values[is][iy], &hm1.values[is][iy], &h0.values[is][iy]);
        let flux: Vec<f64> = (0..w.len())
            .map(|i| w[i].powi(3) / 3.0 + h[i] * w[i] * w[i] + (g[i] + h[i] * h[i]) * w[i])
            .collect();
        let fx = d(&flux);
        (0..w.len()).map(|i| dy(zt, is, iy, i) + fx[i]).collect()
    });
    Ok((first, second))
}

/// Largest absolute entry.
pub fn interior_max(r: &Interior) -> f64 {
    r.iter().flatten().flatten().fold(
        0.0f64,
        |a, v| if v.is_nan() { f64::NAN } else { a.max(v.abs()) },
    )
}

/// Largest absolute entry over the nodes shared with a grid `factor` times coarser
/// in every direction, for convergence studies on a fixed node set.
pub fn interior_max_on_coarse(r: &Interior, factor: usize) -> f64 {
    let f = factor.max(1);
    let mut m = 0.0f64;
    for (a, plane) in r.iter().enumerate() {
        if (a + 1) % f != 0 {
            continue;
        }
        for (b, row) in plane.iter().enumerate() {
            if (b + 1) % f != 0 {
                continue;
            }
            for v in row.iter().step_by(f) {
                m = if v.is_nan() { f64::NAN } else { m.max(v.abs()) };
            }
        }
    }
    m
}
