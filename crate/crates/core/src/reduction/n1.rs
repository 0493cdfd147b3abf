use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hierarchy::{Closure, SpaceTimeField};
use crate::ode::Dp45;

use super::state::DELTA_SEP;

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

fn fd5(f: &dyn Fn(f64) -> f64, r: f64) -> f64 {
    let h = 1e-3 * r.abs().max(1.0);
    (8.0 * (f(r + h) - f(r - h)) - (f(r + 2.0 * h) - f(r - 2.0 * h))) / (12.0 * h)
}

/// Values and slopes on increasing nodes, read back by cubic Hermite interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct RTable {
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
}

impl RTable {
    pub fn eval(&self, r: f64) -> Result<f64> {
        let (lo, hi) = (self.r[0], *self.r.last().expect("nonempty table"));
        let tol = 1e-12 * (hi - lo);
        if !(r >= lo - tol && r <= hi + tol) {
            return Err(Error::Domain(format!("r = {r} outside table [{lo}, {hi}]")));
        }
        let k = self
            .r
            .partition_point(|x| *x <= r)
            .clamp(1, self.r.len() - 1);
        let (r0, r1) = (self.r[k - 1], self.r[k]);
        let h = r1 - r0;
        let t = (r - r0) / h;
        let (t2, t3) = (t * t, t * t * t);
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * self.f[k - 1]
            + (t3 - 2.0 * t2 + t) * h * self.df[k - 1]
            + (-2.0 * t3 + 3.0 * t2) * self.f[k]
            + (t3 - t2) * h * self.df[k])
    }
}

/// One Riemann invariant `r` with implicit characteristics `x = X0(r) + mu(r) s + lambda(r) y`.
#[derive(Clone)]
pub struct N1Reduction {
    pub mu: Fn1,
    pub u: Fn1,
    /// Inverse of the initial profile.
    pub x0: Fn1,
    pub dmu: Option<Fn1>,
    pub du: Option<Fn1>,
    pub dx0: Option<Fn1>,
    /// Search interval for `r`; also the span of the `r`-tables.
    pub bracket: (f64, f64),
    /// `v(r_ref) = 0` and the moment tables start here.
    pub r_ref: f64,
    pub table_nodes: usize,
}

impl std::fmt::Debug for N1Reduction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("N1Reduction")
            .field("bracket", &self.bracket)
            .field("r_ref", &self.r_ref)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct N1Point {
    pub x: f64,
    pub s: f64,
    pub y: f64,
    pub r: f64,
    pub u: f64,
    pub v: f64,
}

impl N1Reduction {
    pub fn new(
        mu: impl Fn(f64) -> f64 + Send + Sync + 'static,
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        x0: impl Fn(f64) -> f64 + Send + Sync + 'static,
        bracket: (f64, f64),
    ) -> Self {
        N1Reduction {
            mu: Arc::new(mu),
            u: Arc::new(u),
            x0: Arc::new(x0),
            dmu: None,
            du: None,
            dx0: None,
            bracket,
            r_ref: bracket.0,
            table_nodes: 2049,
        }
    }

    pub fn with_r_ref(mut self, r_ref: f64) -> Self {
        self.r_ref = r_ref;
        self
    }

    /// Exact derivatives of `mu`, `u`, `X0`.
    pub fn with_derivatives(
        mut self,
        dmu: impl Fn(f64) -> f64 + Send + Sync + 'static,
        du: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dx0: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.dmu = Some(Arc::new(dmu));
        self.du = Some(Arc::new(du));
        self.dx0 = Some(Arc::new(dx0));
        self
    }

    fn deriv(exact: &Option<Fn1>, f: &Fn1, r: f64) -> f64 {
        match exact {
            Some(d) => d(r),
            None => fd5(f.as_ref(), r),
        }
    }

    pub fn mu_at(&self, r: f64) -> f64 {
        (self.mu)(r)
    }
    pub fn u_at(&self, r: f64) -> f64 {
        (self.u)(r)
    }
    pub fn dmu_at(&self, r: f64) -> f64 {
        Self::deriv(&self.dmu, &self.mu, r)
    }
    pub fn du_at(&self, r: f64) -> f64 {
        Self::deriv(&self.du, &self.u, r)
    }
    pub fn dx0_at(&self, r: f64) -> f64 {
        Self::deriv(&self.dx0, &self.x0, r)
    }
    pub fn lambda_at(&self, r: f64) -> f64 {
        let m = self.mu_at(r);
        m * m + self.u_at(r)
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bracket;
        if !(lo < hi) || !(self.r_ref >= lo && self.r_ref <= hi) || self.table_nodes < 3 {
            return Err(Error::Precondition(
                "need lo < hi, r_ref inside the bracket and at least 3 table nodes".into(),
            ));
        }
        Ok(())
    }

    fn g(&self, r: f64, x: f64, s: f64, y: f64) -> f64 {
        (self.x0)(r) + self.mu_at(r) * s + self.lambda_at(r) * y - x
    }

    fn dg(&self, r: f64, s: f64, y: f64) -> f64 {
        let (m, dm) = (self.mu_at(r), self.dmu_at(r));
        self.dx0_at(r) + dm * s + (2.0 * m * dm + self.du_at(r)) * y
    }

    /// Refuses `(s, y)` where the characteristic map folds anywhere in the bracket.
    fn check_monotone(&self, x: f64, s: f64, y: f64) -> Result<()> {
        let (lo, hi) = self.bracket;
        let n = 256;
        for k in 0..=n {
            let r = lo + (hi - lo) * k as f64 / n as f64;
            if !(self.dg(r, s, y) > 0.0) {
                return Err(Error::Shock { s, x });
            }
        }
        Ok(())
    }

    /// Safeguarded Newton for the implicit characteristic relation.
    pub fn solve_r(&self, x: f64, s: f64, y: f64) -> Result<f64> {
        self.validate()?;
        self.check_monotone(x, s, y)?;
        let (mut a, mut b) = self.bracket;
        let (ga, gb) = (self.g(a, x, s, y), self.g(b, x, s, y));
        if ga > 0.0 || gb < 0.0 {
            return Err(Error::Domain(format!(
                "(x, s, y) = ({x}, {s}, {y}) maps outside the r-bracket [{a}, {b}]"
            )));
        }
        let scale = x.abs().max(1.0);
        let mut r = 0.5 * (a + b);
        for _ in 0..200 {
            let gr = self.g(r, x, s, y);
            if gr.abs() <= 1e-15 * scale {
                return Ok(r);
            }
            if gr < 0.0 {
                a = r;
            } else {
                b = r;
            }
            let d = self.dg(r, s, y);
            let mut next = r - gr / d;
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - r).abs() <= 4.0 * f64::EPSILON * r.abs().max(1.0)
                || b - a <= 4.0 * f64::EPSILON * r.abs().max(1.0)
            {
                return Ok(next);
            }
            r = next;
        }
        Err(Error::Shock { s, x })
    }

    fn tabulate<F>(&self, y_ref: &[f64], rhs: F) -> Result<Vec<RTable>>
    where
        F: Fn(f64, &[f64], &mut [f64]) -> Result<()> + Copy,
    {
        self.validate()?;
        let (lo, hi) = self.bracket;
        let ode = Dp45::with_tolerances(1e-12, 1e-14);
        let start = ode.solve(rhs, self.r_ref, y_ref, lo)?;
        let n = self.table_nodes;
        let dim = y_ref.len();
        let mut tables: Vec<RTable> = (0..dim)
            .map(|_| RTable {
                r: Vec::with_capacity(n),
                f: Vec::with_capacity(n),
                df: Vec::with_capacity(n),
            })
            .collect();
        let mut y = start;
        let mut dy = vec![0.0; dim];
        for k in 0..n {
            let r = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            if k > 0 {
                let prev = tables[0].r[k - 1];
                y = ode.solve(rhs, prev, &y, r)?;
            }
            rhs(r, &y, &mut dy)?;
            for (i, t) in tables.iter_mut().enumerate() {
                t.r.push(r);
                t.f.push(y[i]);
                t.df.push(dy[i]);
            }
        }
        Ok(tables)
    }

    /// `v(r) = int_{r_ref}^r mu u' dr`.
    pub fn v_table(&self) -> Result<RTable> {
        let rhs = |r: f64, _: &[f64], d: &mut [f64]| {
            d[0] = self.mu_at(r) * self.du_at(r);
            Ok(())
        };
        Ok(self.tabulate(&[0.0], rhs)?.remove(0))
    }

    /// Solution of `dz/dr = u' / (mu - z)` with `z(r_ref) = z_ref`.
    ///
    /// `H^{-1}` is the same equation with its own reference value.
    pub fn loewner_table(&self, z_ref: f64) -> Result<RTable> {
        let rhs = |r: f64, z: &[f64], d: &mut [f64]| {
            let gap = self.mu_at(r) - z[0];
            if gap.abs() < DELTA_SEP {
                return Err(Error::Singularity {
                    gap,
                    location: format!("r = {r}, z = {}", z[0]),
                });
            }
            d[0] = self.du_at(r) / gap;
            Ok(())
        };
        Ok(self.tabulate(&[z_ref], rhs)?.remove(0))
    }

    /// Moments `A^0..A^order` along `r`: `A^0 = u`, `dA^{m+1} = mu dA^m - m A^{m-1} du`,
    /// with `A^m(r_ref) = 0` for `m >= 1`.
    pub fn moment_tables(&self, order: usize) -> Result<Vec<RTable>> {
        let mut y0 = vec![0.0; order + 1];
        y0[0] = self.u_at(self.r_ref);
        let rhs = move |r: f64, a: &[f64], d: &mut [f64]| {
            let (m, du) = (self.mu_at(r), self.du_at(r));
            d[0] = du;
            for k in 1..a.len() {
                let lower = if k >= 2 {
                    (k - 1) as f64 * a[k - 2] * du
                } else {
                    0.0
                };
                d[k] = m * d[k - 1] - lower;
            }
            Ok(())
        };
        self.tabulate(&y0, rhs)
    }

    /// Closure `A^{order+1}(A^0)` for the truncated chain; needs `u` strictly monotone.
    pub fn chain_closure(&self, order: usize) -> Result<Closure> {
        let tables = Arc::new(self.moment_tables(order + 1)?);
        let (lo, hi) = self.bracket;
        let (ulo, uhi) = (self.u_at(lo), self.u_at(hi));
        if !(uhi > ulo) {
            return Err(Error::Precondition(
                "n1 chain closure needs u increasing on the bracket".into(),
            ));
        }
        let u = self.u.clone();
        Ok(Closure::N1Reduction(Arc::new(move |col: &[f64]| {
            let target = col[0];
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if u(m) < target {
                    a = m;
                } else {
                    b = m;
                }
            }
            tables[order + 1].eval(0.5 * (a + b)).unwrap_or(f64::NAN)
        })))
    }
}

/// Pointwise implicit solve, in parallel over points.
pub fn n1_solve(red: &N1Reduction, points: &[(f64, f64, f64)]) -> Result<Vec<N1Point>> {
    let v = red.v_table()?;
    points
        .par_iter()
        .map(|&(x, s, y)| {
            let r = red.solve_r(x, s, y)?;
            Ok(N1Point {
                x,
                s,
                y,
                r,
                u: red.u_at(r),
                v: v.eval(r)?,
            })
        })
        .collect()
}

/// `r`, `u`, `v` and Loewner solutions `z(r)` sampled on an `(x, s, y)` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct N1Fields {
    pub r: SpaceTimeField,
    pub u: SpaceTimeField,
    pub v: SpaceTimeField,
    /// One field per reference value passed to [`N1Reduction::sample_fields`].
    pub loewner: Vec<SpaceTimeField>,
}

impl N1Reduction {
    /// Samples the implicit solution on a non-periodic grid; `z_refs` seed
    /// `dz/dr = u'/(mu - z)` at `r_ref`.
    pub fn sample_fields(
        &self,
        x: &[f64],
        s: &[f64],
        y: &[f64],
        z_refs: &[f64],
    ) -> Result<N1Fields> {
        let blank = SpaceTimeField::from_fn(x, s, y, false, |_, _, _| 0.0)?;
        let mut points = Vec::with_capacity(x.len() * s.len() * y.len());
        for &sv in s {
            for &yv in y {
                for &xv in x {
                    points.push((xv, sv, yv));
                }
            }
        }
        let sol = n1_solve(self, &points)?;
        let tables = z_refs
            .iter()
            .map(|z| self.loewner_table(*z))
            .collect::<Result<Vec<_>>>()?;
        let fill = |g: &dyn Fn(&N1Point) -> Result<f64>| -> Result<SpaceTimeField> {
            let mut f = blank.clone();
            let mut it = sol.iter();
            for plane in f.values.iter_mut() {
                for row in plane.iter_mut() {
                    for val in row.iter_mut() {
                        *val = g(it.next().expect("one point per node"))?;
                    }
                }
            }
            Ok(f)
        };
        Ok(N1Fields {
            r: fill(&|p| Ok(p.r))?,
            u: fill(&|p| Ok(p.u))?,
            v: fill(&|p| Ok(p.v))?,
            loewner: tables
                .iter()
                .map(|t| fill(&|p| t.eval(p.r)))
                .collect::<Result<Vec<_>>>()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear() -> N1Reduction {
        N1Reduction::new(|r| r, |r| r, |r| r, (0.0, 4.0))
    }

    #[test]
    fn hand_fixture() {
        let p = n1_solve(&linear(), &[(2.0, 1.0, 0.0)]).unwrap()[0];
        assert!((p.r - 1.0).abs() < 1e-14);
        assert!((p.u - 1.0).abs() < 1e-14);
        assert!((p.v - 0.5).abs() < 1e-11, "{}", p.v);
    }

    #[test]
    fn initial_slice_is_the_profile() {
        let red = N1Reduction::new(|r| r, |r| r * r, |r| r + 0.2 * r.sin(), (-2.0, 2.0));
        for x in [-1.0, 0.3, 1.5] {
            let r = red.solve_r(x, 0.0, 0.0).unwrap();
            assert!((r + 0.2 * r.sin() - x).abs() < 1e-14);
        }
    }

    #[test]
    fn folding_is_a_shock() {
        let red = N1Reduction::new(|r| -r, |r| r, |r| r, (0.0, 4.0));
        assert!(matches!(
            red.solve_r(1.0, 2.0, 0.0),
            Err(Error::Shock { .. })
        ));
    }

    #[test]
    fn loewner_table_matches_implicit_form() {
        // dz/dr = 1/(r - z), z(0) = 10: r = z + 1 - 11 e^{z - 10}
        let red = linear().with_r_ref(0.0);
        let t = red.loewner_table(10.0).unwrap();
        let z = t.eval(1.0).unwrap();
        assert!((z + 1.0 - 11.0 * (z - 10.0).exp() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn collision_is_a_singularity() {
        let red = linear();
        assert!(matches!(
            red.loewner_table(0.0),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn moments_start_with_u_and_v() {
        let red = linear().with_r_ref(0.5);
        let a = red.moment_tables(2).unwrap();
        let v = red.v_table().unwrap();
        for r in [0.1, 1.0, 3.3] {
            assert!((a[0].eval(r).unwrap() - r).abs() < 1e-12);
            assert!((a[1].eval(r).unwrap() - v.eval(r).unwrap()).abs() < 1e-12);
            // dA^2/dr = mu dA^1 - A^0 du = r^2 - r
            let want = (r.powi(3) - 0.125) / 3.0 - (r * r - 0.25) / 2.0;
            assert!((a[2].eval(r).unwrap() - want).abs() < 1e-10);
        }
    }
}
