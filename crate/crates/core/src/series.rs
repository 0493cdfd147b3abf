//! Truncated asymptotic series at infinity.
//!
//! An [`AsymptoticSeries`] of order `N` stores
//! `z + c + sum_{n=0}^{N} a_n z^{-(n+1)}`, which is the shape of the Lax
//! function `lambda(z)`, of its inverse `z(lambda)` and of the inverse
//! Loewner map `g(w)`. Everything is generic over [`Scalar`] so the same
//! kernels serve floating-point pipelines and exact identity checks.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{parse_rational, rational_to_string, Rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticSeries<S> {
    const_term: S,
    coeffs: Vec<S>,
}

impl<S: Scalar> AsymptoticSeries<S> {
    /// Normalized series `z + sum coeffs[n] z^{-(n+1)}`; order is `coeffs.len() - 1`.
    ///
    /// Panics on an empty coefficient vector.
    pub fn new(coeffs: Vec<S>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least one coefficient");
        AsymptoticSeries {
            const_term: S::zero(),
            coeffs,
        }
    }

    pub fn with_const(const_term: S, coeffs: Vec<S>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least one coefficient");
        AsymptoticSeries { const_term, coeffs }
    }

    pub fn identity(order: usize) -> Self {
        Self::new(vec![S::zero(); order + 1])
    }

    /// Builds the inverse-series form `lambda - sum h[n] lambda^{-(n+1)}`.
    pub fn from_h(h: &[S]) -> Self {
        Self::new(h.iter().map(|x| -x.clone()).collect())
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn const_term(&self) -> &S {
        &self.const_term
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn is_normalized(&self) -> bool {
        self.const_term.is_zero()
    }

    /// Coefficients read with the `z = lambda - sum H^n lambda^{-(n+1)}` sign.
    pub fn h_coefficients(&self) -> Vec<S> {
        self.coeffs.iter().map(|c| -c.clone()).collect()
    }

    pub fn truncate(&self, order: usize) -> Self {
        let n = order.min(self.order());
        AsymptoticSeries {
            const_term: self.const_term.clone(),
            coeffs: self.coeffs[..=n].to_vec(),
        }
    }

    pub fn to_laurent(&self) -> LaurentSeries<S> {
        let mut c = vec![S::one(), self.const_term.clone()];
        c.extend(self.coeffs.iter().cloned());
        LaurentSeries { top: 1, coeffs: c }
    }

    pub(crate) fn require_normalized(&self, what: &str) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "{what} must have zero constant term"
            )))
        }
    }
}

/// A Laurent series known exactly on degrees `top, top-1, ..., lowest`.
///
/// Terms below `lowest` are unknown (truncated), not zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries<S> {
    top: i64,
    coeffs: Vec<S>,
}

impl<S: Scalar> LaurentSeries<S> {
    pub fn from_polynomial(ascending: &[S]) -> Self {
        let top = ascending.len() as i64 - 1;
        LaurentSeries {
            top,
            coeffs: ascending.iter().rev().cloned().collect(),
        }
    }

    pub fn top(&self) -> i64 {
        self.top
    }

    pub fn lowest(&self) -> i64 {
        self.top - self.coeffs.len() as i64 + 1
    }

    /// Coefficient of `z^degree`; `None` when the degree lies below the
    /// known range.
    pub fn coeff(&self, degree: i64) -> Option<S> {
        if degree > self.top {
            Some(S::zero())
        } else if degree < self.lowest() {
            None
        } else {
            Some(self.coeffs[(self.top - degree) as usize].clone())
        }
    }

    /// Coefficients of degrees `0..=top`, ascending.
    pub fn polynomial_part(&self) -> Vec<S> {
        if self.top < 0 {
            return vec![S::zero()];
        }
        (0..=self.top)
            .map(|d| self.coeff(d).unwrap_or_else(S::zero))
            .collect()
    }

    /// `tail[j]` is the coefficient of `z^{-(j+1)}` for every known negative degree.
    pub fn tail(&self) -> Vec<S> {
        let lo = self.lowest();
        (1..=(-lo).max(0))
            .map(|j| self.coeff(-j).unwrap_or_else(S::zero))
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let top = self.top + other.top;
        let lowest = (self.lowest() + other.top).max(other.lowest() + self.top);
        let len = (top - lowest + 1).max(0) as usize;
        let mut coeffs = vec![S::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                let k = i + j;
                if k < len {
                    coeffs[k] = coeffs[k].clone() + a.clone() * b.clone();
                }
            }
        }
        LaurentSeries { top, coeffs }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = LaurentSeries {
            top: 0,
            coeffs: {
                // 1 is known exactly to every degree the base supports.
                let mut c = vec![S::zero(); self.coeffs.len() * (n.max(1) as usize) + 1];
                c[0] = S::one();
                c
            },
        };
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Drop degrees below `lowest`.
    pub fn truncate_below(&mut self, lowest: i64) {
        let keep = (self.top - lowest + 1).max(0) as usize;
        self.coeffs.truncate(keep);
    }
}

/// Product of two series, truncated at `z^{-(n+1)}` or at the precision the
/// inputs support, whichever is coarser.
pub fn mul<S: Scalar>(
    a: &AsymptoticSeries<S>,
    b: &AsymptoticSeries<S>,
    n: usize,
) -> Result<LaurentSeries<S>> {
    let avail = a.order().min(b.order());
    if n > avail {
        return Err(Error::Order {
            required: n,
            available: avail,
        });
    }
    let mut p = a.to_laurent().mul(&b.to_laurent());
    if p.lowest() < -(n as i64 + 1) {
        p.truncate_below(-(n as i64 + 1));
    }
    Ok(p)
}

// Dense power series in y = 1/z, truncated to `len` coefficients.
fn ps_mul<S: Scalar>(a: &[S], b: &[S], len: usize) -> Vec<S> {
    let mut out = vec![S::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

/// Reciprocal of a power series with constant term one.
fn ps_inv_unit<S: Scalar>(a: &[S], len: usize) -> Vec<S> {
    debug_assert!(a.first().is_some_and(|c| *c == S::one()));
    let mut out = vec![S::zero(); len];
    if len == 0 {
        return out;
    }
    out[0] = S::one();
    for k in 1..len {
        let mut acc = S::zero();
        for j in 1..=k.min(a.len().saturating_sub(1)) {
            acc = acc + a[j].clone() * out[k - j].clone();
        }
        out[k] = -acc;
    }
    out
}

/// `sum_{m} coeffs[m] * w^{m+1}` truncated to `len`, with `w = y + O(y^2)`.
fn ps_sum_powers<S: Scalar>(coeffs: &[S], w: &[S], len: usize) -> Vec<S> {
    let mut out = vec![S::zero(); len];
    let mut wp = w.to_vec();
    wp.resize(len, S::zero());
    for c in coeffs {
        if wp.iter().all(|x| x.is_zero()) {
            break;
        }
        if !c.is_zero() {
            for (o, x) in out.iter_mut().zip(&wp) {
                *o = o.clone() + c.clone() * x.clone();
            }
        }
        wp = ps_mul(&wp, w, len);
    }
    out
}

/// Functional inverse of a normalized series by iterative substitution.
///
/// Given `lambda(z) = z + sum A^n z^{-(n+1)}`, returns the series
/// `z(lambda) = lambda - sum H^n lambda^{-(n+1)}` (stored with the minus
/// sign folded into the coefficients; see [`AsymptoticSeries::h_coefficients`]).
/// Each sweep fixes one more coefficient, so `order + 1` sweeps suffice.
pub fn invert<S: Scalar>(lambda: &AsymptoticSeries<S>) -> Result<AsymptoticSeries<S>> {
    lambda.require_normalized("series to invert")?;
    let n = lambda.order();
    let len = n + 2;
    let a = lambda.coeffs();
    let mut h: Vec<S> = vec![S::zero(); n + 1];
    for _ in 0..=n + 1 {
        // 1/z = y / (1 - sum H^k y^{k+2})
        let mut d = vec![S::zero(); len];
        d[0] = S::one();
        for (k, hk) in h.iter().enumerate() {
            if k + 2 < len {
                d[k + 2] = -hk.clone();
            }
        }
        let inv = ps_inv_unit(&d, len);
        let mut w = vec![S::zero(); len];
        w[1..len].clone_from_slice(&inv[..len - 1]);
        let s = ps_sum_powers(a, &w, len);
        let next: Vec<S> = (0..=n).map(|k| s[k + 1].clone()).collect();
        if next == h {
            break;
        }
        h = next;
    }
    Ok(AsymptoticSeries::from_h(&h))
}

/// `outer(inner(z))`, truncated at order `min(n, outer.order, inner.order)`.
pub fn compose<S: Scalar>(
    outer: &AsymptoticSeries<S>,
    inner: &AsymptoticSeries<S>,
    n: usize,
) -> AsymptoticSeries<S> {
    let m = n.min(outer.order()).min(inner.order());
    let len = m + 2;
    // inner = (1/y) (1 + c y + sum i_k y^{k+2})
    let mut q = vec![S::zero(); len];
    q[0] = S::one();
    q[1] = inner.const_term().clone();
    for (k, ik) in inner.coeffs().iter().enumerate() {
        if k + 2 < len {
            q[k + 2] = ik.clone();
        }
    }
    let inv = ps_inv_unit(&q, len);
    let mut w = vec![S::zero(); len];
    w[1..len].clone_from_slice(&inv[..len - 1]);
    let t = ps_sum_powers(&outer.coeffs()[..=m], &w, len);
    let coeffs = (0..=m)
        .map(|k| inner.coeffs()[k].clone() + t[k + 1].clone())
        .collect();
    AsymptoticSeries::with_const(
        inner.const_term().clone() + outer.const_term().clone() + t[0].clone(),
        coeffs,
    )
}

/// `H^n` from moments `A^n` by series inversion.
pub fn moments_to_h<S: Scalar>(a: &[S]) -> Vec<S> {
    invert(&AsymptoticSeries::new(a.to_vec()))
        .expect("normalized by construction")
        .h_coefficients()
}

/// Moments `A^n` from `H^n`; inversion is an involution.
pub fn h_to_moments<S: Scalar>(h: &[S]) -> Vec<S> {
    invert(&AsymptoticSeries::from_h(h))
        .expect("normalized by construction")
        .coeffs()
        .to_vec()
}

/// `(1/n) (lambda^n)_{>= 0}`, ascending coefficients in `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaxPolynomial<S> {
    degree: usize,
    coeffs: Vec<S>,
}

impl<S: Scalar> LaxPolynomial<S> {
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }
    pub fn into_coeffs(self) -> Vec<S> {
        self.coeffs
    }
}

pub fn lax<S: Scalar>(lambda: &AsymptoticSeries<S>, n: usize) -> Result<LaxPolynomial<S>> {
    lambda.require_normalized("Lax function")?;
    if n == 0 || n > lambda.order() {
        return Err(Error::Order {
            required: n,
            available: lambda.order(),
        });
    }
    let p = lambda.to_laurent().pow(n as u32);
    let mut coeffs = p.polynomial_part();
    coeffs.resize(n + 1, S::zero());
    let coeffs = coeffs.into_iter().map(|c| c.scale(1, n as i64)).collect();
    Ok(LaxPolynomial { degree: n, coeffs })
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

/// Scalars with a JSON encoding: floats as numbers, rationals as `"p/q"`.
pub trait JsonCoefficient: Scalar {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Option<Self>;
}

impl JsonCoefficient for f64 {
    fn to_json(&self) -> Value {
        json!(self)
    }
    fn from_json(v: &Value) -> Option<Self> {
        v.as_f64()
    }
}

impl JsonCoefficient for Rational {
    fn to_json(&self) -> Value {
        Value::String(rational_to_string(self))
    }
    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) => n.as_i64().map(|i| Rational::from_integer(i.into())),
            _ => None,
        }
    }
}

impl<S: JsonCoefficient> AsymptoticSeries<S> {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "order": self.order(),
            "coeffs": self.coeffs.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
        });
        if !self.const_term.is_zero() {
            v["const_term"] = self.const_term.to_json();
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Format("series must be a JSON object".into()))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "order" | "coeffs" | "const_term") {
                return Err(Error::Format(format!("unknown series key `{key}`")));
            }
        }
        let order = obj
            .get("order")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Format("missing integer `order`".into()))?
            as usize;
        let coeffs = obj
            .get("coeffs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Format("missing array `coeffs`".into()))?
            .iter()
            .map(|c| S::from_json(c).ok_or_else(|| Error::Format(format!("bad coefficient {c}"))))
            .collect::<Result<Vec<S>>>()?;
        if coeffs.len() != order + 1 {
            return Err(Error::Format(format!(
                "order {order} needs {} coefficients, got {}",
                order + 1,
                coeffs.len()
            )));
        }
        let const_term = match obj.get("const_term") {
            Some(c) => {
                S::from_json(c).ok_or_else(|| Error::Format(format!("bad const_term {c}")))?
            }
            None => S::zero(),
        };
        Ok(AsymptoticSeries { const_term, coeffs })
    }
}

impl<S: JsonCoefficient> Serialize for AsymptoticSeries<S> {
    fn serialize<Ser: Serializer>(
        &self,
        serializer: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de, S: JsonCoefficient> Deserialize<'de> for AsymptoticSeries<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(deserializer)?;
        Self::from_json(&v).map_err(D::Error::custom)
    }
}
