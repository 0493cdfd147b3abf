use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{MomentField, PeriodicGrid, Spectral};
use crate::scalar::{Scalar, TrigPoly};
use crate::series::{lax, AsymptoticSeries};

/// x-derivative of one row of samples.
pub trait XDerivative<S>: Sync {
    fn dx(&self, row: &[S]) -> Vec<S>;
}

impl XDerivative<f64> for Spectral {
    fn dx(&self, row: &[f64]) -> Vec<f64> {
        self.derivative(row)
    }
}

/// Exact derivative of trigonometric-polynomial samples.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrigDx;

impl XDerivative<TrigPoly> for TrigDx {
    fn dx(&self, row: &[TrigPoly]) -> Vec<TrigPoly> {
        row.iter().map(TrigPoly::derivative).collect()
    }
}

/// Second-order centered differences; one-sided at the ends when not periodic.
#[derive(Clone, Copy, Debug)]
pub struct CentralDx {
    pub h: f64,
    pub periodic: bool,
}

impl XDerivative<f64> for CentralDx {
    fn dx(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        if self.periodic {
            return PeriodicGrid::new(n, n as f64 * self.h).dx_central(f);
        }
        let h2 = 2.0 * self.h;
        (0..n)
            .map(|j| match j {
                0 => (-3.0 * f[0] + 4.0 * f[1] - f[2]) / h2,
                j if j == n - 1 => (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / h2,
                j => (f[j + 1] - f[j - 1]) / h2,
            })
            .collect()
    }
}

/// Sign convention relating hierarchy times to physical labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeConvention {
    /// `t0 = x`, `t1 = s`, `t2 = y`.
    Hierarchy,
    /// `x = t0`, `s = -t1`, `y = -t2`.
    Vertex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyTimes {
    pub convention: TimeConvention,
}

impl HierarchyTimes {
    pub fn new(convention: TimeConvention) -> Self {
        HierarchyTimes { convention }
    }

    /// Factor `c` with `d/d(label) = c d/dt_n`.
    pub fn sign(&self, n: usize) -> f64 {
        match (self.convention, n) {
            (TimeConvention::Vertex, 1 | 2) => -1.0,
            _ => 1.0,
        }
    }

    pub fn label(&self, n: usize) -> String {
        match n {
            0 => "x".into(),
            1 => "s".into(),
            2 => "y".into(),
            n => format!("t{n}"),
        }
    }
}

fn columns<S: Scalar>(a: &[Vec<S>]) -> Vec<Vec<S>> {
    let p = a[0].len();
    (0..p)
        .map(|j| a.iter().map(|row| row[j].clone()).collect())
        .collect()
}

/// Coefficient rows `l[d][p]` of `L_k = (1/k)(lambda^k)_{>=0}` at every point.
fn lax_rows<S: Scalar>(a: &[Vec<S>], k: usize) -> Result<Vec<Vec<S>>> {
    let cols = columns(a);
    let per_point: Vec<Vec<S>> = cols
        .into_par_iter()
        .map(|c| lax(&AsymptoticSeries::new(c), k).map(|l| l.into_coeffs()))
        .collect::<Result<_>>()?;
    Ok((0..=k)
        .map(|d| per_point.iter().map(|l| l[d].clone()).collect())
        .collect())
}

fn check_rows<S>(a: &[Vec<S>]) -> Result<()> {
    if a.is_empty() || a[0].is_empty() {
        return Err(Error::Precondition("empty moment field".into()));
    }
    if a.iter().any(|r| r.len() != a[0].len()) {
        return Err(Error::Precondition("moment rows differ in length".into()));
    }
    Ok(())
}

/// `dA^m/dt_n` for `m = 0..=N-n-1`, from `d lambda/dt_n = {L_{n+1}, lambda}`.
///
/// `a[m][p]` is `A^m` at point `p`.
pub fn lax_flow_with<S: Scalar, D: XDerivative<S>>(
    a: &[Vec<S>],
    n: usize,
    d: &D,
) -> Result<Vec<Vec<S>>> {
    check_rows(a)?;
    let big_n = a.len() - 1;
    if big_n < n + 2 {
        return Err(Error::Order {
            required: n + 2,
            available: big_n,
        });
    }
    let p = a[0].len();
    let l = lax_rows(a, n + 1)?;
    let lx: Vec<Vec<S>> = l.iter().map(|r| d.dx(r)).collect();
    let ax: Vec<Vec<S>> = a.iter().map(|r| d.dx(r)).collect();
    // Coefficient of z^{-(m+1)} in L_z lambda_x - L_x lambda_z.
    Ok((0..big_n - n)
        .map(|m| {
            (0..p)
                .map(|j| {
                    let mut acc = S::zero();
                    for deg in 0..=n + 1 {
                        let k = m + deg;
                        if k == 0 {
                            continue;
                        }
                        let row = k - 1;
                        if deg > 0 {
                            acc =
                                acc + (l[deg][j].clone() * ax[row][j].clone()).scale(deg as i64, 1);
                        }
                        acc = acc + (lx[deg][j].clone() * a[row][j].clone()).scale(k as i64, 1);
                    }
                    acc
                })
                .collect()
        })
        .collect())
}

pub fn lax_flow(field: &MomentField, n: usize) -> Result<Vec<Vec<f64>>> {
    lax_flow_with(&field.a, n, &Spectral::new(field.grid))
}

/// Polynomial part of `lambda^{m-1} * sum rate[k] z^{-(k+1)}`, ascending.
fn flow_of_lax<S: Scalar>(col: &[S], rate: &[S], m: usize) -> Vec<S> {
    if m < 2 {
        return vec![S::zero(); m.max(1)];
    }
    let pw = AsymptoticSeries::new(col.to_vec())
        .to_laurent()
        .pow(m as u32 - 1);
    (0..m - 1)
        .map(|j| {
            let mut acc = S::zero();
            for (k, r) in rate.iter().enumerate().take(m - 1 - j) {
                let c = pw
                    .coeff((j + k + 1) as i64)
                    .expect("nonnegative degrees are always known");
                acc = acc + r.clone() * c;
            }
            acc
        })
        .collect()
}

/// Rows of `D_n L_m - D_m L_n + {L_m, L_n}`, indexed by power of `z`,
/// where `D_k` is the flow generated by `L_k`.
pub fn commutation_check_with<S: Scalar, D: XDerivative<S>>(
    a: &[Vec<S>],
    m: usize,
    n: usize,
    d: &D,
) -> Result<Vec<Vec<S>>> {
    check_rows(a)?;
    if m == 0 || n == 0 {
        return Err(Error::Precondition(
            "Lax polynomials are indexed from 1".into(),
        ));
    }
    let big_n = a.len() - 1;
    let p = a[0].len();
    let need = (m + n).saturating_sub(2).max(m.max(n) + 1);
    if big_n < need {
        return Err(Error::Order {
            required: need,
            available: big_n,
        });
    }
    let lm = lax_rows(a, m)?;
    let ln = lax_rows(a, n)?;
    let rate_n = lax_flow_with(a, n - 1, d)?;
    let rate_m = lax_flow_with(a, m - 1, d)?;
    let cols = columns(a);
    let rn = columns(&rate_n);
    let rm = columns(&rate_m);
    let dn_lm: Vec<Vec<S>> = (0..p).map(|j| flow_of_lax(&cols[j], &rn[j], m)).collect();
    let dm_ln: Vec<Vec<S>> = (0..p).map(|j| flow_of_lax(&cols[j], &rm[j], n)).collect();
    let lmx: Vec<Vec<S>> = lm.iter().map(|r| d.dx(r)).collect();
    let lnx: Vec<Vec<S>> = ln.iter().map(|r| d.dx(r)).collect();
    let top = m + n;
    let mut out = vec![vec![S::zero(); p]; top];
    for (j, col) in out.iter_mut().enumerate() {
        for (pt, v) in col.iter_mut().enumerate() {
            let mut acc = S::zero();
            if let Some(c) = dn_lm[pt].get(j) {
                acc = acc + c.clone();
            }
            if let Some(c) = dm_ln[pt].get(j) {
                acc = acc - c.clone();
            }
            // {L_m, L_n} = L_m,z L_n,x - L_m,x L_n,z
            for i in 1..=m {
                if j + 1 >= i && j + 1 - i <= n {
                    let q = j + 1 - i;
                    acc = acc + (lm[i][pt].clone() * lnx[q][pt].clone()).scale(i as i64, 1);
                }
            }
            for i in 1..=n {
                if j + 1 >= i && j + 1 - i <= m {
                    let q = j + 1 - i;
                    acc = acc - (lmx[q][pt].clone() * ln[i][pt].clone()).scale(i as i64, 1);
                }
            }
            *v = acc;
        }
    }
    Ok(out)
}

/// Max coefficient residual of the zero-curvature identity on a grid field.
pub fn commutation_check(field: &MomentField, m: usize, n: usize) -> Result<f64> {
    let rows = commutation_check_with(&field.a, m, n, &Spectral::new(field.grid))?;
    Ok(rows
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// `{A^m, A^n} f = -m A^{m+n-1} f_x - n (A^{m+n-1} f)_x`.
pub fn km_bracket_apply_with<S: Scalar, D: XDerivative<S>>(
    a: &[Vec<S>],
    m: usize,
    n: usize,
    f: &[S],
    d: &D,
) -> Result<Vec<S>> {
    check_rows(a)?;
    if m + n == 0 {
        return Ok(vec![S::zero(); f.len()]);
    }
    let k = m + n - 1;
    if k >= a.len() {
        return Err(Error::Order {
            required: k,
            available: a.len() - 1,
        });
    }
    let fx = d.dx(f);
    let prod: Vec<S> = a[k]
        .iter()
        .zip(f)
        .map(|(x, y)| x.clone() * y.clone())
        .collect();
    let px = d.dx(&prod);
    Ok(a[k]
        .iter()
        .zip(fx)
        .zip(px)
        .map(|((ak, fx), px)| -(ak.clone() * fx).scale(m as i64, 1) - px.scale(n as i64, 1))
        .collect())
}

pub fn km_bracket_apply(field: &MomentField, m: usize, n: usize, f: &[f64]) -> Result<Vec<f64>> {
    km_bracket_apply_with(&field.a, m, n, f, &Spectral::new(field.grid))
}

/// Rows `m = 0..=N-2` of `sum_n {A^m, A^n} dH/dA^n + dA^m/dt_1` for the density
/// `H = (1/2)(A^2 + (A^0)^2)`; zero when the Benney flow is Hamiltonian.
pub fn hamiltonian_flow_with<S: Scalar, D: XDerivative<S>>(
    a: &[Vec<S>],
    d: &D,
) -> Result<Vec<Vec<S>>> {
    check_rows(a)?;
    let big_n = a.len() - 1;
    if big_n < 3 {
        return Err(Error::Order {
            required: 3,
            available: big_n,
        });
    }
    let half = vec![S::from_ratio(1, 2); a[0].len()];
    let lax1 = lax_flow_with(a, 1, d)?;
    (0..=big_n - 2)
        .map(|m| {
            let t2 = km_bracket_apply_with(a, m, 2, &half, d)?;
            let t0 = km_bracket_apply_with(a, m, 0, &a[0], d)?;
            Ok(t2
                .into_iter()
                .zip(t0)
                .zip(&lax1[m])
                .map(|((x, y), z)| x + y + z.clone())
                .collect())
        })
        .collect()
}

pub fn hamiltonian_flow_check(field: &MomentField) -> Result<f64> {
    let rows = hamiltonian_flow_with(&field.a, &Spectral::new(field.grid))?;
    Ok(rows
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// `I^n = int H^n dx`, `n = 0..=N`.
pub fn conserved_integrals(field: &MomentField) -> Vec<f64> {
    field.conserved_integrals()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rational, Poly};

    fn trig_field() -> Vec<Vec<TrigPoly>> {
        let c = |k, p, q| TrigPoly::cos(k, rational(p, q));
        let s = |k, p, q| TrigPoly::sin(k, rational(p, q));
        [
            TrigPoly::constant(rational(1, 1)) + c(1, 1, 2),
            s(1, 1, 3) + c(2, 1, 5),
            TrigPoly::constant(rational(2, 1)) + s(2, 1, 4),
            c(1, 1, 7),
            s(1, 2, 3),
            c(3, 1, 2),
            TrigPoly::constant(rational(1, 3)),
        ]
        .into_iter()
        .map(|t| vec![t])
        .collect()
    }

    /// Benney moment equations written out by hand on symbolic rows.
    #[test]
    fn first_flow_is_benney_chain_symbolically() {
        // Variables: A^m at index m, A^m_x at index 10 + m.
        struct SymDx;
        impl XDerivative<Poly> for SymDx {
            fn dx(&self, row: &[Poly]) -> Vec<Poly> {
                row.iter()
                    .map(|p| {
                        let mut out = Poly::default();
                        for v in 0..10 {
                            out = out + p.partial(v) * Poly::var(10 + v);
                        }
                        out
                    })
                    .collect()
            }
        }
        for big_n in 3..=6 {
            let a: Vec<Vec<Poly>> = (0..=big_n).map(|m| vec![Poly::var(m)]).collect();
            let flow = lax_flow_with(&a, 1, &SymDx).unwrap();
            assert_eq!(flow.len(), big_n - 1);
            for (m, row) in flow.iter().enumerate() {
                let mut expect = Poly::var(10 + m + 1);
                if m > 0 {
                    expect = expect + (Poly::var(m - 1) * Poly::var(10)).scale(m as i64, 1);
                }
                // dA^m/dt_1 = -dA^m/ds
                assert_eq!(row[0], expect, "row {m}");
            }
        }
    }

    #[test]
    fn zeroth_flow_is_translation() {
        let a = trig_field();
        let flow = lax_flow_with(&a, 0, &TrigDx).unwrap();
        for (m, row) in flow.iter().enumerate() {
            assert_eq!(row[0], a[m][0].derivative());
        }
    }

    #[test]
    fn constant_field_has_no_flow() {
        let g = PeriodicGrid::standard(16);
        let f = MomentField::new(g, (0..6).map(|m| vec![0.3 * m as f64 + 1.0; 16]).collect());
        for n in 0..4 {
            let flow = lax_flow(&f, n).unwrap();
            assert!(flow.iter().flatten().all(|v| v.abs() < 1e-13));
        }
        assert!(commutation_check(&f, 2, 3).unwrap() < 1e-13);
        assert!(hamiltonian_flow_check(&f).unwrap() < 1e-13);
    }

    #[test]
    fn insufficient_truncation_names_requirement() {
        let g = PeriodicGrid::standard(8);
        let f = MomentField::new(g, vec![vec![1.0; 8]; 3]);
        assert_eq!(
            lax_flow(&f, 2),
            Err(Error::Order {
                required: 4,
                available: 2
            })
        );
    }

    #[test]
    fn commutation_is_exact_on_trig_fields() {
        let a = trig_field();
        for (m, n) in [(2, 3), (2, 4), (3, 4), (3, 3), (1, 3)] {
            let rows = commutation_check_with(&a, m, n, &TrigDx).unwrap();
            assert!(rows.iter().flatten().all(|c| c.is_zero()), "({m},{n})");
        }
    }

    #[test]
    fn benney_flow_is_hamiltonian_exactly() {
        let rows = hamiltonian_flow_with(&trig_field(), &TrigDx).unwrap();
        assert!(rows.iter().flatten().all(|c| c.is_zero()));
    }

    #[test]
    fn km_bracket_zero_index_drops_first_term() {
        let a = trig_field();
        let f = vec![TrigPoly::sin(1, rational(1, 1))];
        let lhs = km_bracket_apply_with(&a, 0, 3, &f, &TrigDx).unwrap();
        let rhs = -(a[2][0].clone() * f[0].clone()).derivative().scale(3, 1);
        assert_eq!(lhs[0], rhs);
    }

    #[test]
    fn nonperiodic_central_difference_is_exact_on_quadratics() {
        let d = CentralDx {
            h: 0.1,
            periodic: false,
        };
        let f: Vec<f64> = (0..10).map(|j| (0.1 * j as f64).powi(2)).collect();
        for (j, v) in d.dx(&f).iter().enumerate() {
            assert!((v - 0.2 * j as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn vertex_convention_flips_s_and_y() {
        let t = HierarchyTimes::new(TimeConvention::Vertex);
        assert_eq!(
            (t.sign(0), t.sign(1), t.sign(2), t.sign(3)),
            (1.0, -1.0, -1.0, 1.0)
        );
        assert_eq!(HierarchyTimes::new(TimeConvention::Hierarchy).sign(1), 1.0);
    }
}
