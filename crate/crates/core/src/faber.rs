//! Faber polynomials of a normalized map `g(w) = w + sum b_n w^{-n}`.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{AsymptoticSeries, JsonCoefficient};

#[derive(Clone, Debug, PartialEq)]
pub struct FaberPolynomial<S = f64> {
    index: usize,
    coeffs: Vec<S>,
}

impl<S: Scalar> FaberPolynomial<S> {
    pub fn index(&self) -> usize {
        self.index
    }

    /// Ascending coefficients in `w`, length `index + 1`.
    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn derivative_coeffs(&self) -> Vec<S> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.clone() * S::from_int(k as i64))
            .collect()
    }

    /// Horner evaluation at a scalar of the same ring.
    pub fn eval_at(&self, x: &S) -> S {
        horner(&self.coeffs, x)
    }

    pub fn derivative_at(&self, x: &S) -> S {
        horner(&self.derivative_coeffs(), x)
    }
}

impl FaberPolynomial<f64> {
    pub fn eval(&self, xi: f64) -> f64 {
        self.eval_at(&xi)
    }
}

impl<S: JsonCoefficient> FaberPolynomial<S> {
    pub fn to_json(&self) -> Value {
        json!({
            "n": self.index,
            "coeffs": self.coeffs.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
        })
    }
}

fn horner<S: Scalar>(coeffs: &[S], x: &S) -> S {
    coeffs
        .iter()
        .rev()
        .fold(S::zero(), |acc, c| acc * x.clone() + c.clone())
}

/// `Phi_0 .. Phi_{n_max}` from `b[0] = b_1, b[1] = b_2, ...` by the recurrence
/// `Phi_{n+1} = w Phi_n - sum_{k=1}^{n-1} b_{n-k} Phi_k - (n+1) b_n`.
pub fn faber_all<S: Scalar>(b: &[S], n_max: usize) -> Result<Vec<FaberPolynomial<S>>> {
    if n_max > b.len() {
        return Err(Error::Order {
            required: n_max,
            available: b.len(),
        });
    }
    let bn = |n: usize| b[n - 1].clone();
    let mut out: Vec<FaberPolynomial<S>> = vec![FaberPolynomial {
        index: 0,
        coeffs: vec![S::one()],
    }];
    if n_max >= 1 {
        out.push(FaberPolynomial {
            index: 1,
            coeffs: vec![S::zero(), S::one()],
        });
    }
    for n in 1..n_max {
        let mut c = vec![S::zero(); n + 2];
        for (k, x) in out[n].coeffs.iter().enumerate() {
            c[k + 1] = x.clone();
        }
        for k in 1..n {
            let f = bn(n - k);
            for (j, x) in out[k].coeffs.iter().enumerate() {
                c[j] = c[j].clone() - f.clone() * x.clone();
            }
        }
        c[0] = c[0].clone() - bn(n) * S::from_int(n as i64 + 1);
        out.push(FaberPolynomial {
            index: n + 1,
            coeffs: c,
        });
    }
    Ok(out)
}

/// `Phi_n(xi)` for `n = 0..=n_max` from the logarithmic generating function
/// `log((g(w) - xi)/w) = -sum Phi_n(xi) / (n w^n)`.
///
/// The log series is built by the exact recursion for logarithms of unit
/// power series. Its floating-point error is bounded by running the same
/// recursion on absolute values; the result is rejected when that bound is
/// not below `1e-12` relative to the value.
pub fn faber_via_log(g: &AsymptoticSeries<f64>, xi: f64, n_max: usize) -> Result<Vec<f64>> {
    g.require_normalized("map")?;
    let needed = n_max.saturating_sub(1);
    if needed > g.order() + 1 {
        return Err(Error::Order {
            required: needed,
            available: g.order() + 1,
        });
    }
    // P(y) = (g - xi)/w = 1 - xi y + sum b_n y^{n+1}
    let len = n_max + 1;
    let mut p = vec![0.0; len];
    p[0] = 1.0;
    if len > 1 {
        p[1] = -xi;
    }
    for (n, bn) in g.coeffs().iter().enumerate() {
        if n + 2 < len {
            p[n + 2] = *bn;
        }
    }
    let log = log_unit_series(&p);
    let major = log_unit_series_majorant(&p);
    let mut out = Vec::with_capacity(len);
    out.push(1.0);
    for n in 1..len {
        let phi = -(n as f64) * log[n];
        let err = f64::EPSILON * (n as f64) * (n as f64) * major[n];
        if !err.is_finite() || err > 1e-12 * phi.abs().max(1.0) {
            return Err(Error::Domain(format!(
                "log series ill-conditioned at n = {n} (error bound {err:e}) for xi = {xi}"
            )));
        }
        out.push(phi);
    }
    Ok(out)
}

// L = log P with P(0) = 1: k L_k = k p_k - sum_{j=1}^{k-1} j L_j p_{k-j}.
fn log_unit_series(p: &[f64]) -> Vec<f64> {
    let mut l = vec![0.0; p.len()];
    for k in 1..p.len() {
        let mut acc = k as f64 * p[k];
        for j in 1..k {
            acc -= j as f64 * l[j] * p[k - j];
        }
        l[k] = acc / k as f64;
    }
    l
}

fn log_unit_series_majorant(p: &[f64]) -> Vec<f64> {
    let mut l = vec![0.0; p.len()];
    for k in 1..p.len() {
        let mut acc = k as f64 * p[k].abs();
        for j in 1..k {
            acc += j as f64 * l[j] * p[k - j].abs();
        }
        l[k] = acc / k as f64;
    }
    l
}

pub fn faber_derivative(phi: &FaberPolynomial<f64>, xi: f64) -> f64 {
    phi.derivative_at(&xi)
}

/// Coefficients `c_n` of `1/(g(w) - xi) = sum_{n>=1} c_n w^{-n}`, `n = 1..=n_max`.
pub fn reciprocal_coefficients(g: &AsymptoticSeries<f64>, xi: f64, n_max: usize) -> Vec<f64> {
    // 1/(g - xi) = y / P(y)
    let len = n_max;
    let mut p = vec![0.0; len.max(1)];
    p[0] = 1.0;
    if len > 1 {
        p[1] = -xi;
    }
    for (n, bn) in g.coeffs().iter().enumerate() {
        if n + 2 < len {
            p[n + 2] = *bn;
        }
    }
    let mut inv = vec![0.0; len];
    if len > 0 {
        inv[0] = 1.0;
    }
    for k in 1..len {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += p[j] * inv[k - j];
        }
        inv[k] = -acc;
    }
    inv
}
