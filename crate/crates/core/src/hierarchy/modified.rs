use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::field::{PeriodicGrid, Spectral};
use crate::kinetic::BenneyResidual;
use crate::scalar::{rational, Poly, Scalar};
use crate::series::{h_to_moments, moments_to_h};

fn q(n: i64, d: i64) -> Poly {
    Poly::constant(rational(n, d))
}

/// Coefficient of `B^j_x` in `B^i_s` along the modified chain.
fn chain_coefficient(i: usize, j: usize) -> Poly {
    let b = Poly::var;
    let mut c = Poly::default();
    if j == i + 1 {
        c = c - q(1, 1);
    }
    if j == i {
        c = c - q(1, 2) * b(0);
    }
    if j == 0 {
        c = c - q(i as i64 + 1, 2) * b(i);
        if i >= 1 {
            c = c + q(i as i64, 4) * b(i - 1) * b(0);
        }
    }
    if j == 1 && i >= 1 {
        c = c - q(i as i64, 2) * b(i - 1);
    }
    c
}

/// Flux gradient `dF/dB^j = -sum_i dH/dB^i C^i_j` of a conserved density.
fn flux_gradient(h: &Poly, top: usize) -> Vec<Poly> {
    (0..=top + 1)
        .map(|j| {
            let mut g = Poly::default();
            for i in 0..=top {
                let d = h.partial(i);
                if !d.is_zero() {
                    g = g - d * chain_coefficient(i, j);
                }
            }
            g
        })
        .collect()
}

fn integrate_gradient(grad: &[Poly]) -> Poly {
    grad.iter()
        .enumerate()
        .fold(Poly::default(), |acc, (j, g)| acc + g.homotopy_term(j))
}

fn build_substitution(count: usize) -> Vec<Poly> {
    // hs[k + 1] = H^k
    let mut hs = vec![Poly::var(0)];
    for k in -1i64..count as i64 - 2 {
        let cur = &hs[(k + 1) as usize];
        let flux = integrate_gradient(&flux_gradient(cur, (k + 1) as usize));
        let next = if k == -1 {
            flux - (hs[0].clone() * hs[0].clone()).scale(1, 2)
        } else {
            let mut sum = Poly::default();
            for m in 0..k {
                sum = sum + hs[(m + 1) as usize].clone() * hs[(k - m) as usize].clone();
            }
            flux + sum.scale(1, 2)
        };
        hs.push(next);
    }
    hs
}

/// `H^{-1}, H^0, ..., H^{n-1}` as polynomials in `B^0..B^n` (variable `i` is `B^i`).
///
/// Each density is the flux of the previous conservation law along the
/// modified chain, recovered by radial integration of its gradient.
pub fn modified_substitution(n: usize) -> Vec<Poly> {
    static CACHE: OnceLock<std::sync::Mutex<Vec<Poly>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| std::sync::Mutex::new(Vec::new()));
    let mut c = cache.lock().expect("substitution cache poisoned");
    if c.len() < n + 1 {
        *c = build_substitution(n + 1);
    }
    c[..n + 1].to_vec()
}

/// Moments `B^0..B^N` of the modified chain with optional `H^{-1}..H^{N-1}` shadow rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ModifiedMomentField {
    pub grid: PeriodicGrid,
    pub b: Vec<Vec<f64>>,
    /// `h[k]` holds `H^{k-1}`.
    pub h: Option<Vec<Vec<f64>>>,
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

impl ModifiedMomentField {
    pub fn new(grid: PeriodicGrid, b: Vec<Vec<f64>>) -> Self {
        ModifiedMomentField { grid, b, h: None }
    }

    pub fn order(&self) -> usize {
        self.b.len() - 1
    }

    pub fn with_h(mut self) -> Self {
        let subst = modified_substitution(self.order());
        let n = self.grid.n;
        let mut h = vec![vec![0.0; n]; subst.len()];
        for j in 0..n {
            let col = column(&self.b, j);
            for (k, p) in subst.iter().enumerate() {
                h[k][j] = p.eval(&col);
            }
        }
        self.h = Some(h);
        self
    }

    /// Inverts the triangular substitution; `h[k]` is `H^{k-1}`.
    pub fn from_h(grid: PeriodicGrid, h: Vec<Vec<f64>>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::Precondition("need at least H^{-1}".into()));
        }
        let len = h.len();
        if h.iter().any(|r| r.len() != grid.n) {
            return Err(Error::Precondition("H rows must match the grid".into()));
        }
        let subst = modified_substitution(len - 1);
        let mut b = vec![vec![0.0; grid.n]; len];
        for j in 0..grid.n {
            let mut col = vec![0.0; len];
            col[0] = h[0][j];
            for k in 1..len {
                let rest = subst[k].eval(&col);
                col[k] = h[k][j] - rest;
            }
            for (row, v) in b.iter_mut().zip(&col) {
                row[j] = *v;
            }
        }
        Ok(ModifiedMomentField {
            grid,
            b,
            h: Some(h),
        })
    }

    /// Builds `B` from moments `A^0..A^M` and the extra density `H^{-1}`.
    pub fn from_moments(grid: PeriodicGrid, a: &[Vec<f64>], hm1: Vec<f64>) -> Result<Self> {
        let mut h = vec![hm1];
        let cols: Vec<Vec<f64>> = (0..grid.n).map(|j| moments_to_h(&column(a, j))).collect();
        for k in 0..a.len() {
            h.push(cols.iter().map(|c| c[k]).collect());
        }
        Self::from_h(grid, h)
    }

    /// `A^0..A^{N-1}` recovered from the shadow rows `H^0..H^{N-1}`.
    pub fn to_moments(&self) -> Vec<Vec<f64>> {
        let filled = if self.h.is_some() {
            self.clone()
        } else {
            self.clone().with_h()
        };
        let h = filled.h.expect("filled above");
        let rows = &h[1..];
        let cols: Vec<Vec<f64>> = (0..self.grid.n)
            .map(|j| h_to_moments(&column(rows, j)))
            .collect();
        (0..rows.len())
            .map(|k| cols.iter().map(|c| c[k]).collect())
            .collect()
    }
}

/// Centered-in-`s`, spectral-in-`x` residual of the modified chain, rows `k = 0..N-1`.
pub fn modified_chain_residual(
    history: &[ModifiedMomentField],
    s: &[f64],
) -> Result<BenneyResidual> {
    let m = history.len();
    if m < 3 || s.len() != m {
        return Err(Error::Precondition(
            "need at least three time slices with matching times".into(),
        ));
    }
    let ds = s[1] - s[0];
    if s.windows(2)
        .any(|w| ((w[1] - w[0]) - ds).abs() > 1e-9 * ds.abs().max(1e-300))
    {
        return Err(Error::Precondition(
            "time slices must be equally spaced".into(),
        ));
    }
    let order = history[0].order();
    if order == 0 {
        return Err(Error::Precondition("need at least two rows".into()));
    }
    let grid = history[0].grid;
    let sp = Spectral::new(grid);
    let mut values = Vec::new();
    let mut max_per_row = vec![0.0f64; order];
    for j in 1..m - 1 {
        let (prev, cur, next) = (&history[j - 1].b, &history[j].b, &history[j + 1].b);
        let bx: Vec<Vec<f64>> = cur.iter().map(|r| sp.derivative(r)).collect();
        let mut slice = Vec::with_capacity(order);
        for k in 0..order {
            let kf = k as f64;
            let row: Vec<f64> = (0..grid.n)
                .map(|i| {
                    let dt = (next[k][i] - prev[k][i]) / (2.0 * ds);
                    let mut r = dt
                        + bx[k + 1][i]
                        + 0.5 * cur[0][i] * bx[k][i]
                        + 0.5 * (kf + 1.0) * cur[k][i] * bx[0][i];
                    if k > 0 {
                        r += kf * cur[k - 1][i] * (0.5 * bx[1][i] - 0.25 * cur[0][i] * bx[0][i]);
                    }
                    r
                })
                .collect();
            let rmax = row.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            max_per_row[k] = max_per_row[k].max(rmax);
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn coefficient_of(p: &Poly, var: usize, power: u32) -> Rational {
        let mut e = vec![0; var + 1];
        e[var] = power;
        p.coefficient(&e)
    }

    fn b(i: usize) -> Poly {
        Poly::var(i)
    }

    #[test]
    fn first_densities_match_known_table() {
        let h = modified_substitution(3);
        assert_eq!(h[0], b(0));
        assert_eq!(h[1], b(1));
        assert_eq!(h[2], b(2) + b(0) * b(1) - (b(0) * b(0) * b(0)).scale(1, 12));
    }

    #[test]
    fn flux_gradients_are_closed() {
        let h = modified_substitution(6);
        for (idx, hk) in h.iter().enumerate() {
            let g = flux_gradient(hk, idx);
            for i in 0..g.len() {
                for j in 0..i {
                    assert_eq!(
                        g[i].partial(j),
                        g[j].partial(i),
                        "H^{} d{i} d{j}",
                        idx as i64 - 1
                    );
                }
            }
        }
    }

    #[test]
    fn substitution_is_triangular() {
        let h = modified_substitution(6);
        for (idx, hk) in h.iter().enumerate() {
            assert!(hk.depends_only_on_first(idx + 1));
            assert_eq!(coefficient_of(hk, idx, 1), <Rational as Scalar>::one());
            assert!(hk.partial(idx).partial(idx).is_zero());
        }
    }

    #[test]
    fn moment_round_trip_is_identity() {
        let g = PeriodicGrid::standard(8);
        let a: Vec<Vec<f64>> = (0..4)
            .map(|m| g.sample(|x| 1.0 + 0.3 * (x + m as f64).sin() / (m + 1) as f64))
            .collect();
        let hm1 = g.sample(|x| 0.2 * x.cos());
        let f = ModifiedMomentField::from_moments(g, &a, hm1.clone()).unwrap();
        assert_eq!(f.order(), 4);
        let again = ModifiedMomentField::new(g, f.b.clone()).with_h();
        for (r0, r1) in f.h.as_ref().unwrap().iter().zip(again.h.as_ref().unwrap()) {
            for (x, y) in r0.iter().zip(r1) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        let back = again.to_moments();
        for (r0, r1) in a.iter().zip(&back) {
            for (x, y) in r0.iter().zip(r1) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_history_has_zero_residual() {
        let g = PeriodicGrid::standard(8);
        let f = ModifiedMomentField::new(g, vec![vec![0.5; 8], vec![1.0; 8], vec![-0.2; 8]]);
        let r = modified_chain_residual(&[f.clone(), f.clone(), f], &[0.0, 0.1, 0.2]).unwrap();
        assert_eq!(r.max, 0.0);
    }
}
