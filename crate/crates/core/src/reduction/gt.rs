use serde::Serialize;

use crate::error::{Error, Result};
use crate::report::ResidualReport;

use super::state::{ReductionSamples, DELTA_SEP};

/// Residuals of one ordered pair `(i, k)` at the interior nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairResidual {
    pub i: usize,
    pub k: usize,
    /// `d_i mu_k - d_i u / (mu_i - mu_k)`.
    pub first: Vec<f64>,
    /// `d_i d_k u - 2 d_i u d_k u / (mu_i - mu_k)^2`.
    pub second: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GtResidual {
    /// Flat indices of the interior nodes, in the order of the pair vectors.
    pub nodes: Vec<usize>,
    pub pairs: Vec<PairResidual>,
    pub first: ResidualReport,
    pub second: ResidualReport,
}

impl GtResidual {
    pub fn max(&self) -> f64 {
        self.first.max.max(self.second.max)
    }

    pub fn pair(&self, i: usize, k: usize) -> Option<&PairResidual> {
        self.pairs.iter().find(|p| p.i == i && p.k == k)
    }
}

struct Stencil<'a> {
    s: &'a ReductionSamples,
}

impl Stencil<'_> {
    fn d(&self, f: &[f64], p: usize, a: usize) -> f64 {
        let st = self.s.grid.stride(a);
        (f[p + st] - f[p - st]) / (2.0 * self.s.grid.h[a])
    }

    fn dd(&self, f: &[f64], p: usize, a: usize, b: usize) -> f64 {
        let (sa, sb) = (self.s.grid.stride(a), self.s.grid.stride(b));
        (f[p + sa + sb] - f[p + sa - sb] - f[p - sa + sb] + f[p - sa - sb])
            / (4.0 * self.s.grid.h[a] * self.s.grid.h[b])
    }
}

fn check_separation(s: &ReductionSamples, rows: &[Vec<f64>], what: &str) -> Result<()> {
    for p in 0..s.grid.len() {
        for i in 0..rows.len() {
            for k in i + 1..rows.len() {
                let gap = (rows[i][p] - rows[k][p]).abs();
                if !(gap >= DELTA_SEP) {
                    return Err(Error::Degeneracy {
                        i,
                        k,
                        gap,
                        location: format!("{what}, r = {:?}", s.grid.point(p)),
                    });
                }
            }
        }
    }
    Ok(())
}

fn prepare(s: &ReductionSamples) -> Result<Vec<usize>> {
    s.validate()?;
    if s.components() < 2 {
        return Err(Error::Precondition("need at least two components".into()));
    }
    check_separation(s, &s.mu, "mu")?;
    Ok((0..s.grid.len())
        .filter(|&p| s.grid.is_interior(p))
        .collect())
}

/// Centered finite-difference residuals of the Gibbons–Tsarev system.
pub fn gt_residual(s: &ReductionSamples) -> Result<GtResidual> {
    let nodes = prepare(s)?;
    let st = Stencil { s };
    let n = s.components();
    let mut pairs = Vec::new();
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            let mut first = Vec::with_capacity(nodes.len());
            let mut second = Vec::with_capacity(nodes.len());
            for &p in &nodes {
                let gap = s.mu[i][p] - s.mu[k][p];
                let (ui, uk) = (st.d(&s.u, p, i), st.d(&s.u, p, k));
                first.push(st.d(&s.mu[k], p, i) - ui / gap);
                second.push(st.dd(&s.u, p, i, k) - 2.0 * ui * uk / (gap * gap));
            }
            pairs.push(PairResidual {
                i,
                k,
                first,
                second,
            });
        }
    }
    let grid = s.grid.n.iter().copied().max().unwrap_or(0);
    let first = ResidualReport::from_values(
        "gibbons_tsarev_mu",
        grid,
        pairs.iter().flat_map(|p| p.first.clone()),
    );
    let second = ResidualReport::from_values(
        "gibbons_tsarev_u",
        grid,
        pairs.iter().flat_map(|p| p.second.clone()),
    );
    Ok(GtResidual {
        nodes,
        pairs,
        first,
        second,
    })
}

/// `d_i lambda_k / (lambda_i - lambda_k) - d_i mu_k / (mu_i - mu_k)` over `i != k`.
pub fn tsarev_check(s: &ReductionSamples) -> Result<ResidualReport> {
    let nodes = prepare(s)?;
    let lambda = s
        .lambda
        .as_ref()
        .ok_or_else(|| Error::Precondition("Tsarev check needs lambda samples".into()))?;
    check_separation(s, lambda, "lambda")?;
    let st = Stencil { s };
    let n = s.components();
    let mut values = Vec::new();
    for i in 0..n {
        for k in (0..n).filter(|&k| k != i) {
            for &p in &nodes {
                let lhs = st.d(&lambda[k], p, i) / (lambda[i][p] - lambda[k][p]);
                let rhs = st.d(&s.mu[k], p, i) / (s.mu[i][p] - s.mu[k][p]);
                values.push(lhs - rhs);
            }
        }
    }
    Ok(ResidualReport::from_values(
        "tsarev",
        s.grid.n.iter().copied().max().unwrap_or(0),
        values,
    ))
}

/// Closedness of `d_i v = mu_i d_i u`: `d_k(mu_i d_i u) - d_i(mu_k d_k u)` expanded by the product rule.
pub fn v_consistency(s: &ReductionSamples) -> Result<ResidualReport> {
    let nodes = prepare(s)?;
    let st = Stencil { s };
    let n = s.components();
    let mut values = Vec::new();
    for i in 0..n {
        for k in i + 1..n {
            for &p in &nodes {
                let (ui, uk) = (st.d(&s.u, p, i), st.d(&s.u, p, k));
                values.push(
                    st.d(&s.mu[i], p, k) * ui - st.d(&s.mu[k], p, i) * uk
                        + (s.mu[i][p] - s.mu[k][p]) * st.dd(&s.u, p, i, k),
                );
            }
        }
    }
    Ok(ResidualReport::from_values(
        "v_mixed_partials",
        s.grid.n.iter().copied().max().unwrap_or(0),
        values,
    ))
}

/// `(mu_k - mu_i) F_u(mu_i, u) - [F(mu_k, u) - F(mu_i, u)] / (mu_k - mu_i) + F_mu(mu_i, u)`
/// with central differences of step `du`.
///
/// Coincident velocities give a non-finite value.
pub fn ansatz_residual(f: &dyn Fn(f64, f64) -> f64, mu_i: f64, mu_k: f64, u: f64, du: f64) -> f64 {
    let f_u = (f(mu_i, u + du) - f(mu_i, u - du)) / (2.0 * du);
    let f_mu = (f(mu_i + du, u) - f(mu_i - du, u)) / (2.0 * du);
    let gap = mu_k - mu_i;
    gap * f_u - (f(mu_k, u) - f(mu_i, u)) / gap + f_mu
}
