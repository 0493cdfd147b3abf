//! Coefficient rings shared by the series, Faber and hierarchy kernels.
//!
//! Every algebraic routine in the crate is generic over [`Scalar`], so the
//! same code path runs on `f64` (for the PDE pipelines), on exact rationals,
//! on symbolic polynomials in named moments ([`Poly`]), and on
//! trigonometric polynomials in `x` with rational coefficients
//! ([`TrigPoly`]), which lets x-dependent identities be checked exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn is_zero(&self) -> bool;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    fn scale(&self, num: i64, den: i64) -> Self {
        self.clone() * Self::from_ratio(num, den)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Scalar for Rational {
    fn zero() -> Self {
        <Rational as Zero>::zero()
    }
    fn one() -> Self {
        <Rational as One>::one()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

pub fn rational(num: i64, den: i64) -> Rational {
    <Rational as Scalar>::from_ratio(num, den)
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Render as `"p/q"`, or `"p"` for integers.
pub fn rational_to_string(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rational::new(p, q))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

// ---------------------------------------------------------------------------
// Multivariate polynomials
// ---------------------------------------------------------------------------

/// Sparse multivariate polynomial with rational coefficients.
///
/// Monomials are exponent vectors without trailing zeros; the zero
/// polynomial has no terms.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Vec<u32>, Rational>,
}

fn trim(mut e: Vec<u32>) -> Vec<u32> {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

impl Poly {
    pub fn constant(c: Rational) -> Self {
        let mut p = Poly::default();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn var(index: usize) -> Self {
        let mut e = vec![0; index + 1];
        e[index] = 1;
        let mut p = Poly::default();
        p.add_term(e, <Rational as Scalar>::one());
        p
    }

    fn add_term(&mut self, exps: Vec<u32>, c: Rational) {
        if Zero::is_zero(&c) {
            return;
        }
        let exps = trim(exps);
        let entry = self.terms.entry(exps.clone()).or_insert_with(Zero::zero);
        *entry += c;
        if Zero::is_zero(entry) {
            self.terms.remove(&exps);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &Rational)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn num_vars(&self) -> usize {
        self.terms.keys().map(|e| e.len()).max().unwrap_or(0)
    }

    /// Total degree; zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn coefficient(&self, exps: &[u32]) -> Rational {
        self.terms
            .get(&trim(exps.to_vec()))
            .cloned()
            .unwrap_or_else(Zero::zero)
    }

    pub fn partial(&self, var: usize) -> Poly {
        let mut out = Poly::default();
        for (e, c) in &self.terms {
            let k = e.get(var).copied().unwrap_or(0);
            if k == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] -= 1;
            out.add_term(e2, c * Rational::from_integer(BigInt::from(k)));
        }
        out
    }

    /// Whether every variable index appearing is `< bound`.
    pub fn depends_only_on_first(&self, bound: usize) -> bool {
        self.terms
            .keys()
            .all(|e| e.iter().enumerate().all(|(i, &k)| k == 0 || i < bound))
    }

    pub fn has_integer_coefficients(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut m = rational_to_f64(c);
                for (i, &k) in e.iter().enumerate() {
                    if k > 0 {
                        m *= values[i].powi(k as i32);
                    }
                }
                m
            })
            .sum()
    }

    pub fn eval_exact(&self, values: &[Rational]) -> Rational {
        let mut acc: Rational = Zero::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    m *= &values[i];
                }
            }
            acc += m;
        }
        acc
    }

    /// Scale each monomial by `1 / (deg + 1)` and multiply by `x_var`:
    /// the per-term integral of the radial homotopy formula.
    pub(crate) fn homotopy_term(&self, var: usize) -> Poly {
        let mut out = Poly::default();
        for (e, c) in &self.terms {
            let deg: u32 = e.iter().sum();
            let mut e2 = e.clone();
            if e2.len() <= var {
                e2.resize(var + 1, 0);
            }
            e2[var] += 1;
            out.add_term(e2, c / Rational::from_integer(BigInt::from(deg + 1)));
        }
        out
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            if !first {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            } else if neg {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| {
                    if k == 1 {
                        format!("x{i}")
                    } else {
                        format!("x{i}^{k}")
                    }
                })
                .collect();
            let unit = a == <Rational as Scalar>::one();
            if vars.is_empty() {
                write!(f, "{}", rational_to_string(&a))?;
            } else if unit {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", rational_to_string(&a), vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        for (e, c) in rhs.terms {
            self.add_term(e, c);
        }
        self
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        self + (-rhs)
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(mut self) -> Poly {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Mul for Poly {
    type Output = Poly;
    // exponents add under multiplication
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Poly) -> Poly {
        let mut out = Poly::default();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let n = ea.len().max(eb.len());
                let e: Vec<u32> = (0..n)
                    .map(|i| ea.get(i).copied().unwrap_or(0) + eb.get(i).copied().unwrap_or(0))
                    .collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl Scalar for Poly {
    fn zero() -> Self {
        Poly::default()
    }
    fn one() -> Self {
        Poly::constant(<Rational as Scalar>::one())
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Poly::constant(rational(num, den))
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Trigonometric polynomials
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Wave {
    Cos,
    Sin,
}

/// Real trigonometric polynomial `sum c_k cos(kx) + s_k sin(kx)` on the
/// circle of length 2π, with exact rational coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct TrigPoly {
    terms: BTreeMap<(u32, Wave), Rational>,
}

impl TrigPoly {
    pub fn constant(c: Rational) -> Self {
        Self::cos(0, c)
    }

    pub fn cos(k: u32, c: Rational) -> Self {
        let mut t = TrigPoly::default();
        t.add_term(k, Wave::Cos, c);
        t
    }

    pub fn sin(k: u32, c: Rational) -> Self {
        let mut t = TrigPoly::default();
        t.add_term(k, Wave::Sin, c);
        t
    }

    fn add_term(&mut self, k: u32, w: Wave, c: Rational) {
        if Zero::is_zero(&c) || (k == 0 && w == Wave::Sin) {
            return;
        }
        let entry = self.terms.entry((k, w)).or_insert_with(Zero::zero);
        *entry += c;
        if Zero::is_zero(entry) {
            self.terms.remove(&(k, w));
        }
    }

    /// sin((a - b) x) with the sign folded in when a < b.
    fn add_sin_diff(&mut self, a: u32, b: u32, c: Rational) {
        if a >= b {
            self.add_term(a - b, Wave::Sin, c);
        } else {
            self.add_term(b - a, Wave::Sin, -c);
        }
    }

    pub fn derivative(&self) -> TrigPoly {
        let mut out = TrigPoly::default();
        for (&(k, w), c) in &self.terms {
            let kk = Rational::from_integer(BigInt::from(k));
            match w {
                Wave::Cos => out.add_term(k, Wave::Sin, -(c * kk)),
                Wave::Sin => out.add_term(k, Wave::Cos, c * kk),
            }
        }
        out
    }

    pub fn max_frequency(&self) -> u32 {
        self.terms.keys().map(|(k, _)| *k).max().unwrap_or(0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(k, w), c)| {
                let a = rational_to_f64(c);
                match w {
                    Wave::Cos => a * (k as f64 * x).cos(),
                    Wave::Sin => a * (k as f64 * x).sin(),
                }
            })
            .sum()
    }
}

impl fmt::Debug for TrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(&(k, w), c)| {
                let name = match w {
                    Wave::Cos => "cos",
                    Wave::Sin => "sin",
                };
                if k == 0 {
                    rational_to_string(c)
                } else {
                    format!("{}*{}({}x)", rational_to_string(c), name, k)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for TrigPoly {
    type Output = TrigPoly;
    fn add(mut self, rhs: TrigPoly) -> TrigPoly {
        for ((k, w), c) in rhs.terms {
            self.add_term(k, w, c);
        }
        self
    }
}

impl Sub for TrigPoly {
    type Output = TrigPoly;
    fn sub(self, rhs: TrigPoly) -> TrigPoly {
        self + (-rhs)
    }
}

impl Neg for TrigPoly {
    type Output = TrigPoly;
    fn neg(mut self) -> TrigPoly {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Mul for TrigPoly {
    type Output = TrigPoly;
    fn mul(self, rhs: TrigPoly) -> TrigPoly {
        let half = rational(1, 2);
        let mut out = TrigPoly::default();
        for (&(a, wa), ca) in &self.terms {
            for (&(b, wb), cb) in &rhs.terms {
                let c = ca * cb * &half;
                match (wa, wb) {
                    (Wave::Cos, Wave::Cos) => {
                        out.add_term(a.abs_diff(b), Wave::Cos, c.clone());
                        out.add_term(a + b, Wave::Cos, c);
                    }
                    (Wave::Sin, Wave::Sin) => {
                        out.add_term(a.abs_diff(b), Wave::Cos, c.clone());
                        out.add_term(a + b, Wave::Cos, -c);
                    }
                    (Wave::Sin, Wave::Cos) => {
                        out.add_term(a + b, Wave::Sin, c.clone());
                        out.add_sin_diff(a, b, c);
                    }
                    (Wave::Cos, Wave::Sin) => {
                        out.add_term(a + b, Wave::Sin, c.clone());
                        out.add_sin_diff(a, b, -c);
                    }
                }
            }
        }
        out
    }
}

impl Scalar for TrigPoly {
    fn zero() -> Self {
        TrigPoly::default()
    }
    fn one() -> Self {
        TrigPoly::constant(<Rational as Scalar>::one())
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        TrigPoly::constant(rational(num, den))
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}
