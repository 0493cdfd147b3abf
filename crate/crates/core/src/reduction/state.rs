use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// Minimum separation of characteristic velocities and Loewner arguments.
pub const DELTA_SEP: f64 = 1e-3;

/// A diagonal reduction: velocities `mu_i(r)` and density `u(r)` in Riemann invariants.
pub trait Reduction: Send + Sync {
    fn components(&self) -> usize;
    fn mu(&self, r: &[f64]) -> Vec<f64>;
    fn u(&self, r: &[f64]) -> f64;

    /// Five-point central differences unless overridden.
    fn grad_u(&self, r: &[f64]) -> Vec<f64> {
        (0..r.len())
            .map(|i| {
                let h = 1e-3 * r[i].abs().max(1.0);
                let at = |d: f64| {
                    let mut p = r.to_vec();
                    p[i] += d;
                    self.u(&p)
                };
                (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
            })
            .collect()
    }

    /// Commuting-flow velocities `lambda_i = mu_i^2 + u`.
    fn lambda(&self, r: &[f64]) -> Vec<f64> {
        let u = self.u(r);
        self.mu(r).into_iter().map(|m| m * m + u).collect()
    }

    /// Potential `v` with `d_i v = mu_i d_i u`, when known in closed form.
    fn v(&self, _r: &[f64]) -> Option<f64> {
        None
    }
}

/// Two-component shallow-water reduction, `r = (r+, r-)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ColdPlasma;

impl ColdPlasma {
    /// `(eta, v)` from Riemann invariants `r+- = v +- 2 sqrt(eta)`.
    pub fn primitive(r: &[f64]) -> (f64, f64) {
        let c = 0.25 * (r[0] - r[1]);
        (c * c, 0.5 * (r[0] + r[1]))
    }

    pub fn invariants(eta: f64, v: f64) -> [f64; 2] {
        [v + 2.0 * eta.sqrt(), v - 2.0 * eta.sqrt()]
    }
}

impl Reduction for ColdPlasma {
    fn components(&self) -> usize {
        2
    }
    fn mu(&self, r: &[f64]) -> Vec<f64> {
        let (eta, v) = Self::primitive(r);
        vec![v + eta.sqrt(), v - eta.sqrt()]
    }
    fn u(&self, r: &[f64]) -> f64 {
        Self::primitive(r).0
    }
    fn grad_u(&self, r: &[f64]) -> Vec<f64> {
        let d = (r[0] - r[1]) / 8.0;
        vec![d, -d]
    }
    fn v(&self, r: &[f64]) -> Option<f64> {
        let (eta, v) = Self::primitive(r);
        Some(eta * v)
    }
}

/// `inner` in the coordinates `r_i = rho_i + a rho_i^3 / 3`.
///
/// Riemann invariants are defined up to per-axis reparametrization, so this
/// is the same reduction with non-polynomial sampling.
#[derive(Clone, Debug, PartialEq)]
pub struct Warped<R> {
    pub inner: R,
    pub a: f64,
}

impl<R: Reduction> Warped<R> {
    fn map(&self, rho: &[f64]) -> Vec<f64> {
        rho.iter().map(|p| p + self.a * p.powi(3) / 3.0).collect()
    }
}

impl<R: Reduction> Reduction for Warped<R> {
    fn components(&self) -> usize {
        self.inner.components()
    }
    fn mu(&self, rho: &[f64]) -> Vec<f64> {
        self.inner.mu(&self.map(rho))
    }
    fn u(&self, rho: &[f64]) -> f64 {
        self.inner.u(&self.map(rho))
    }
    fn grad_u(&self, rho: &[f64]) -> Vec<f64> {
        self.inner
            .grad_u(&self.map(rho))
            .into_iter()
            .zip(rho)
            .map(|(g, p)| g * (1.0 + self.a * p * p))
            .collect()
    }
    fn lambda(&self, rho: &[f64]) -> Vec<f64> {
        self.inner.lambda(&self.map(rho))
    }
    fn v(&self, rho: &[f64]) -> Option<f64> {
        self.inner.v(&self.map(rho))
    }
}

type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Reduction given by closures.
#[derive(Clone)]
pub struct FnReduction {
    pub n: usize,
    pub mu: VecFn,
    pub u: ScalarFn,
    pub lambda: Option<VecFn>,
}

impl std::fmt::Debug for FnReduction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FnReduction(N = {})", self.n)
    }
}

impl Reduction for FnReduction {
    fn components(&self) -> usize {
        self.n
    }
    fn mu(&self, r: &[f64]) -> Vec<f64> {
        (self.mu)(r)
    }
    fn u(&self, r: &[f64]) -> f64 {
        (self.u)(r)
    }
    fn lambda(&self, r: &[f64]) -> Vec<f64> {
        match &self.lambda {
            Some(l) => l(r),
            None => {
                let u = self.u(r);
                self.mu(r).into_iter().map(|m| m * m + u).collect()
            }
        }
    }
}

/// Uniform tensor grid in `r`-space; the last axis varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct RGrid {
    pub lo: Vec<f64>,
    pub h: Vec<f64>,
    pub n: Vec<usize>,
}

impl RGrid {
    pub fn new(lo: Vec<f64>, h: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        if lo.is_empty() || lo.len() != h.len() || lo.len() != n.len() {
            return Err(Error::Precondition(
                "r-grid axes must agree in number".into(),
            ));
        }
        if h.iter().any(|v| !(*v > 0.0)) || n.iter().any(|v| *v < 3) {
            return Err(Error::Precondition(
                "r-grid needs h > 0 and at least 3 nodes per axis".into(),
            ));
        }
        Ok(RGrid { lo, h, n })
    }

    /// Square grid on `[lo_i, lo_i + width]` with spacing `h`.
    pub fn cube(lo: &[f64], width: f64, h: f64) -> Result<Self> {
        let n = (width / h).round() as usize + 1;
        Self::new(lo.to_vec(), vec![h; lo.len()], vec![n; lo.len()])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n[axis + 1..].iter().product()
    }

    pub fn multi(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            out[a] = flat % self.n[a];
            flat /= self.n[a];
        }
        out
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi(flat)
            .iter()
            .enumerate()
            .map(|(a, &k)| self.lo[a] + k as f64 * self.h[a])
            .collect()
    }

    pub fn is_interior(&self, flat: usize) -> bool {
        self.multi(flat)
            .iter()
            .zip(&self.n)
            .all(|(&k, &n)| k > 0 && k + 1 < n)
    }

    fn to_json(&self) -> Value {
        json!({"lo": self.lo, "h": self.h, "n": self.n})
    }
}

/// `mu_i`, `u` and optionally `lambda_i` sampled on an r-grid; `mu[i][flat]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionSamples {
    pub grid: RGrid,
    pub mu: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub lambda: Option<Vec<Vec<f64>>>,
}

impl ReductionSamples {
    pub fn from_reduction(red: &dyn Reduction, grid: RGrid) -> Result<Self> {
        let n = red.components();
        if grid.dim() != n {
            return Err(Error::Precondition(format!(
                "grid has {} axes for a {n}-component reduction",
                grid.dim()
            )));
        }
        let mut mu = vec![Vec::with_capacity(grid.len()); n];
        let mut lambda = vec![Vec::with_capacity(grid.len()); n];
        let mut u = Vec::with_capacity(grid.len());
        for p in 0..grid.len() {
            let r = grid.point(p);
            for (i, m) in red.mu(&r).into_iter().enumerate() {
                mu[i].push(m);
            }
            for (i, l) in red.lambda(&r).into_iter().enumerate() {
                lambda[i].push(l);
            }
            u.push(red.u(&r));
        }
        Ok(ReductionSamples {
            grid,
            mu,
            u,
            lambda: Some(lambda),
        })
    }

    pub fn components(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.grid.len();
        if self.mu.len() != self.grid.dim() {
            return Err(Error::Precondition(
                "one velocity per r-axis required".into(),
            ));
        }
        let rows = self.mu.iter().chain(self.lambda.iter().flatten());
        if self.u.len() != len || rows.into_iter().any(|r| r.len() != len) {
            return Err(Error::Precondition(
                "sample arrays must match the r-grid".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("N".into(), json!(self.components()));
        let mut t = Map::new();
        t.insert("r_grid".into(), self.grid.to_json());
        t.insert("mu".into(), json!(self.mu));
        t.insert("u".into(), json!(self.u));
        if let Some(l) = &self.lambda {
            t.insert("lambda".into(), json!(l));
        }
        m.insert("tabulated".into(), Value::Object(t));
        Value::Object(m)
    }
}

/// Reduction fixtures accepted on input.
#[derive(Clone, Debug, PartialEq)]
pub enum ReductionFixture {
    ColdPlasma,
    Tabulated(ReductionSamples),
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], what: &str) -> Result<()> {
    for k in obj.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::Format(format!("unknown key `{k}` in {what}")));
        }
    }
    Ok(())
}

fn f64_vec(v: &Value, what: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| Error::Format(format!("{what} must be an array")))?
        .iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| Error::Format(format!("{what} must hold numbers")))
        })
        .collect()
}

fn f64_matrix(v: &Value, what: &str) -> Result<Vec<Vec<f64>>> {
    v.as_array()
        .ok_or_else(|| Error::Format(format!("{what} must be an array of arrays")))?
        .iter()
        .map(|r| f64_vec(r, what))
        .collect()
}

impl ReductionFixture {
    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Format("reduction fixture must be an object".into()))?;
        check_keys(obj, &["N", "kind", "tabulated"], "reduction fixture")?;
        let n = obj
            .get("N")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Format("reduction fixture needs integer `N`".into()))?
            as usize;
        match (obj.get("kind"), obj.get("tabulated")) {
            (Some(k), None) => match k.as_str() {
                Some("cold_plasma") if n == 2 => Ok(ReductionFixture::ColdPlasma),
                Some("cold_plasma") => Err(Error::Format("cold_plasma fixture has N = 2".into())),
                _ => Err(Error::Format(format!("unknown reduction kind {k}"))),
            },
            (None, Some(t)) => {
                let t = t
                    .as_object()
                    .ok_or_else(|| Error::Format("`tabulated` must be an object".into()))?;
                check_keys(t, &["r_grid", "mu", "u", "lambda"], "tabulated fixture")?;
                let g = t
                    .get("r_grid")
                    .and_then(Value::as_object)
                    .ok_or_else(|| Error::Format("tabulated fixture needs `r_grid`".into()))?;
                check_keys(g, &["lo", "h", "n"], "r_grid")?;
                let get = |k: &str| {
                    g.get(k)
                        .ok_or_else(|| Error::Format(format!("r_grid needs `{k}`")))
                };
                let ns: Vec<usize> = f64_vec(get("n")?, "r_grid.n")?
                    .into_iter()
                    .map(|x| x as usize)
                    .collect();
                let grid = RGrid::new(
                    f64_vec(get("lo")?, "r_grid.lo")?,
                    f64_vec(get("h")?, "r_grid.h")?,
                    ns,
                )?;
                let samples = ReductionSamples {
                    grid,
                    mu: f64_matrix(
                        t.get("mu")
                            .ok_or_else(|| Error::Format("tabulated needs `mu`".into()))?,
                        "mu",
                    )?,
                    u: f64_vec(
                        t.get("u")
                            .ok_or_else(|| Error::Format("tabulated needs `u`".into()))?,
                        "u",
                    )?,
                    lambda: t
                        .get("lambda")
                        .map(|l| f64_matrix(l, "lambda"))
                        .transpose()?,
                };
                if samples.components() != n {
                    return Err(Error::Format(format!(
                        "N = {n} but {} velocity rows",
                        samples.components()
                    )));
                }
                samples.validate()?;
                Ok(ReductionFixture::Tabulated(samples))
            }
            _ => Err(Error::Format(
                "reduction fixture needs exactly one of `kind`, `tabulated`".into(),
            )),
        }
    }

    /// Samples on `grid` (ignored for tabulated fixtures).
    pub fn samples(&self, grid: Option<RGrid>) -> Result<ReductionSamples> {
        match self {
            ReductionFixture::ColdPlasma => {
                let grid = grid.ok_or_else(|| {
                    Error::Precondition("cold_plasma fixture needs an r-grid".into())
                })?;
                ReductionSamples::from_reduction(&ColdPlasma, grid)
            }
            ReductionFixture::Tabulated(s) => Ok(s.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cold_plasma_round_trips_primitives() {
        let r = ColdPlasma::invariants(0.49, 1.3);
        let (eta, v) = ColdPlasma::primitive(&r);
        assert!((eta - 0.49).abs() < 1e-15 && (v - 1.3).abs() < 1e-15);
        let mu = ColdPlasma.mu(&r);
        assert!((mu[0] - 2.0).abs() < 1e-15 && (mu[1] - 0.6).abs() < 1e-15);
        let fd = FnReduction {
            n: 2,
            mu: Arc::new(|r: &[f64]| ColdPlasma.mu(r)),
            u: Arc::new(|r: &[f64]| ColdPlasma.u(r)),
            lambda: None,
        };
        for (a, b) in fd.grad_u(&r).iter().zip(ColdPlasma.grad_u(&r)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_indexing() {
        let g = RGrid::new(vec![0.0, 1.0], vec![0.5, 0.25], vec![3, 4]).unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!(g.multi(7), vec![1, 3]);
        assert_eq!(g.point(7), vec![0.5, 1.75]);
        assert_eq!(g.stride(0), 4);
        assert!(g.is_interior(5) && !g.is_interior(7));
    }

    #[test]
    fn fixture_json_round_trip_and_strictness() {
        let f = ReductionFixture::from_json(&json!({"N": 2, "kind": "cold_plasma"})).unwrap();
        assert_eq!(f, ReductionFixture::ColdPlasma);
        assert!(
            ReductionFixture::from_json(&json!({"N": 2, "kind": "cold_plasma", "x": 1})).is_err()
        );
        let g = RGrid::cube(&[2.0, 0.5], 0.5, 0.25).unwrap();
        let s = ReductionSamples::from_reduction(&ColdPlasma, g).unwrap();
        let back = ReductionFixture::from_json(&s.to_json()).unwrap();
        assert_eq!(back, ReductionFixture::Tabulated(s));
    }
}
