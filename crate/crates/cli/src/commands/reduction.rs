use loewner_core::hierarchy::{mdkp_residual, zk_residual, Interior};
use loewner_core::reduction::{
    cold_plasma_sheet, conservation_pair_residual, dist_residual, dkp_residual, gt_residual,
    n1_solve, tsarev_check, v_consistency, vertex_flows, ColdPlasma, N1Fields, N1Reduction, RGrid,
    ReductionFixture, ReductionSamples, Warped,
};
use loewner_core::ResidualReport;
use serde::Deserialize;
use serde_json::Value;

use crate::artifacts::Context;
use crate::config::{GridCfg, Poly1, Profile};
use crate::error::CliResult;

fn report(op: &str, grid: usize, r: &Interior) -> ResidualReport {
    ResidualReport::from_values(op, grid, r.iter().flatten().flatten().copied())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RGridCfg {
    pub lo: Vec<f64>,
    pub width: f64,
    /// Intervals per axis.
    pub n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckGt {
    /// `{"N": 2, "kind": "cold_plasma"}` or `{"N": k, "tabulated": {...}}`.
    pub fixture: Value,
    /// Sampling grid for analytic fixtures.
    pub grid: Option<RGridCfg>,
    /// Cubic change of invariants `r -> r + a r^3 / 3` applied to the cold-plasma fixture.
    pub warp: Option<f64>,
}

pub fn gt_samples(cfg: &CheckGt) -> CliResult<ReductionSamples> {
    let fixture = ReductionFixture::from_json(&cfg.fixture)?;
    let grid = cfg
        .grid
        .as_ref()
        .map(|g| RGrid::cube(&g.lo, g.width, g.width / g.n.max(1) as f64))
        .transpose()?;
    Ok(match (&fixture, cfg.warp) {
        (ReductionFixture::ColdPlasma, Some(a)) => {
            let grid = grid.ok_or_else(|| {
                loewner_core::Error::Precondition("warped fixture needs a grid".into())
            })?;
            ReductionSamples::from_reduction(
                &Warped {
                    inner: ColdPlasma,
                    a,
                },
                grid,
            )?
        }
        (ReductionFixture::Tabulated(_), Some(_)) => {
            return Err(loewner_core::Error::Precondition(
                "warp applies to analytic fixtures only".into(),
            )
            .into())
        }
        _ => fixture.samples(grid)?,
    })
}

pub fn check_gt(cfg: &CheckGt, ctx: &mut Context) -> CliResult<()> {
    let s = gt_samples(cfg)?;
    let gt = gt_residual(&s)?;
    let grid = s.grid.n.iter().copied().max().unwrap_or(0);
    let all = gt
        .pairs
        .iter()
        .flat_map(|p| p.first.iter().chain(&p.second))
        .copied();
    ctx.check(
        "gt",
        ResidualReport::from_values("gibbons_tsarev", grid, all),
    )?;
    if s.lambda.is_some() {
        ctx.check("tsarev", tsarev_check(&s)?)?;
    }
    ctx.check("v_consistency", v_consistency(&s)?)
}

fn ten() -> f64 {
    10.0
}

fn minus_two() -> f64 {
    -2.0
}

/// `N = 1` reduction with polynomial `mu(r)`, `u(r)` and initial inverse profile `x0(r)`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct N1Cfg {
    pub mu: Poly1,
    pub u: Poly1,
    pub x0: Poly1,
    pub bracket: [f64; 2],
    pub r_ref: Option<f64>,
    /// Windows `[lo, hi]` in `x`, `s`, `y`, sampled with spacing `h`.
    pub x: [f64; 2],
    pub s: [f64; 2],
    pub y: [f64; 2],
    pub h: f64,
    /// Reference value of the Loewner solution `z`.
    #[serde(default = "ten")]
    pub z_ref: f64,
    /// Reference value of `H^{-1}`.
    #[serde(default = "minus_two")]
    pub h_ref: f64,
    /// Points `[x, s, y]` written to `spot.csv`.
    #[serde(default)]
    pub spot: Vec<[f64; 3]>,
}

impl N1Cfg {
    pub fn reduction(&self) -> N1Reduction {
        let (mu, u, x0) = (self.mu.clone(), self.u.clone(), self.x0.clone());
        let (dmu, du, dx0) = (mu.derivative(), u.derivative(), x0.derivative());
        let red = N1Reduction::new(
            move |r| mu.eval(r),
            move |r| u.eval(r),
            move |r| x0.eval(r),
            (self.bracket[0], self.bracket[1]),
        )
        .with_derivatives(
            move |r| dmu.eval(r),
            move |r| du.eval(r),
            move |r| dx0.eval(r),
        );
        match self.r_ref {
            Some(r) => red.with_r_ref(r),
            None => red,
        }
    }

    fn axis(&self, w: [f64; 2]) -> Vec<f64> {
        let n = ((w[1] - w[0]) / self.h).round().max(2.0) as usize + 1;
        (0..n).map(|k| w[0] + k as f64 * self.h).collect()
    }

    pub fn fields(&self) -> CliResult<(N1Reduction, N1Fields)> {
        let red = self.reduction();
        let f = red.sample_fields(
            &self.axis(self.x),
            &self.axis(self.s),
            &self.axis(self.y),
            &[self.z_ref, self.h_ref],
        )?;
        Ok((red, f))
    }

    fn spot(&self, red: &N1Reduction, ctx: &Context) -> CliResult<()> {
        if self.spot.is_empty() {
            return Ok(());
        }
        let pts: Vec<(f64, f64, f64)> = self.spot.iter().map(|p| (p[0], p[1], p[2])).collect();
        let rows = n1_solve(red, &pts)?
            .into_iter()
            .map(|p| vec![p.x, p.s, p.y, p.r, p.u, p.v]);
        ctx.out
            .csv("spot.csv", &["x", "s", "y", "r", "u", "v"], rows)?;
        Ok(())
    }
}

pub fn check_dkp(cfg: &N1Cfg, ctx: &mut Context) -> CliResult<()> {
    let (red, f) = cfg.fields()?;
    cfg.spot(&red, ctx)?;
    let nx = f.u.shape().2;
    let (g1, g2) = conservation_pair_residual(&f.u, &f.v, &f.loewner[0])?;
    let (d1, d2) = dkp_residual(&f.u, &f.v)?;
    ctx.check("gen_s", report("generating_s", nx, &g1))?;
    ctx.check("gen_y", report("generating_y", nx, &g2))?;
    ctx.check("dkp_1", report("dkp_1", nx, &d1))?;
    ctx.check("dkp_2", report("dkp_2", nx, &d2))?;
    ctx.check("zk", report("zk", nx, &zk_residual(&f.u)?))
}

pub fn vertex_check(cfg: &N1Cfg, ctx: &mut Context) -> CliResult<()> {
    let (red, f) = cfg.fields()?;
    cfg.spot(&red, ctx)?;
    let nx = f.u.shape().2;
    for n in 1..=2 {
        let r = vertex_flows(&f.loewner[0], &f.u, &f.v, n)?;
        ctx.check(
            &format!("vertex_t{n}"),
            report(&format!("vertex_t{n}"), nx, &r),
        )?;
    }
    Ok(())
}

fn five() -> usize {
    5
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MdkpData {
    N1(N1Cfg),
    /// Both commuting cold-plasma flows from `(eta, v)` at `s = y = 0`.
    ColdPlasmaSheet {
        grid: GridCfg,
        eta: Profile,
        v: Profile,
        h: f64,
        #[serde(default = "five")]
        points: usize,
        dt_max: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckMdkp {
    pub data: MdkpData,
}

pub fn check_mdkp(cfg: &CheckMdkp, ctx: &mut Context) -> CliResult<()> {
    match &cfg.data {
        MdkpData::N1(n1) => {
            let (red, f) = n1.fields()?;
            n1.spot(&red, ctx)?;
            let nx = f.u.shape().2;
            let (z, hm1) = (&f.loewner[0], &f.loewner[1]);
            let mut zt = z.clone();
            for (a, b) in zt
                .values
                .iter_mut()
                .flatten()
                .flatten()
                .zip(hm1.values.iter().flatten().flatten())
            {
                *a -= b;
            }
            let (a, b) = dist_residual(&zt, hm1, &f.u)?;
            let (m1, m2) = mdkp_residual(hm1, &f.u)?;
            ctx.check("dist_s", report("shifted_s", nx, &a))?;
            ctx.check("dist_y", report("shifted_y", nx, &b))?;
            ctx.check("mdkp_1", report("mdkp_1", nx, &m1))?;
            ctx.check("mdkp_2", report("mdkp_2", nx, &m2))
        }
        MdkpData::ColdPlasmaSheet {
            grid,
            eta,
            v,
            h,
            points,
            dt_max,
        } => {
            let g = grid.grid();
            let axis: Vec<f64> = (0..*points).map(|k| k as f64 * h).collect();
            let sheet =
                cold_plasma_sheet(g, &eta.sample(&g), &v.sample(&g), &axis, &axis, *dt_max)?;
            let (m1, m2) = mdkp_residual(&sheet.h_minus_one()?, &sheet.eta)?;
            ctx.check("mdkp_1", report("mdkp_1", g.n, &m1))?;
            ctx.check("mdkp_2", report("mdkp_2", g.n, &m2))
        }
    }
}
