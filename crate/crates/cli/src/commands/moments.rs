use loewner_core::field::{MomentField, PeriodicGrid};
use loewner_core::hierarchy::{
    commutation_check, conserved_integrals, evolve_chain, hamiltonian_flow_check, km_bracket_apply,
    ChainOptions, Closure,
};
use loewner_core::kinetic::MomentHistory;
use loewner_core::ResidualReport;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;

use crate::artifacts::Context;
use crate::config::{GridCfg, Profile};
use crate::error::CliResult;

fn one() -> usize {
    1
}

fn four() -> usize {
    4
}

/// Writes `moments.csv` (`s,x,n,value`) and its metadata sidecar.
pub fn write_history(
    ctx: &Context,
    hist: &MomentHistory,
    closure: &str,
    extra: serde_json::Value,
) -> CliResult<()> {
    let grid = hist.fields[0].grid;
    let rows = hist.s.iter().zip(&hist.fields).flat_map(|(s, f)| {
        let mut out = Vec::with_capacity(grid.n * f.a.len());
        for j in 0..grid.n {
            for (n, row) in f.a.iter().enumerate() {
                out.push(vec![*s, grid.x(j), n as f64, row[j]]);
            }
        }
        out
    });
    ctx.out
        .csv("moments.csv", &["s", "x", "n", "value"], rows)?;
    ctx.out.json(
        "moments.json",
        &json!({
            "convention": "A^n_s + A^{n+1}_x + n A^{n-1} A^0_x = 0",
            "closure": closure,
            "grids": {
                "x": { "n": grid.n, "length": grid.length },
                "s": { "first": hist.s[0], "last": hist.s[hist.s.len() - 1], "slices": hist.s.len() },
                "order": hist.fields[0].order(),
            },
            "run": extra,
        }),
    )?;
    ctx.out.gnuplot(
        "moments.gp",
        "set datafile separator ','\nset xlabel 'x'\nplot for [n=0:*] 'moments.csv' using 2:($3==n ? $4 : 1/0) with dots title sprintf('A^%d', n)\n",
    )
}

/// Largest relative drift of `I^n`, `n <= top`, over the history.
pub fn integral_drift(hist: &MomentHistory, top: usize) -> (Vec<Vec<f64>>, f64) {
    let all: Vec<Vec<f64>> = hist.fields.iter().map(conserved_integrals).collect();
    let first = &all[0];
    let mut worst = 0.0f64;
    for row in &all {
        for n in 0..=top.min(row.len() - 1) {
            worst = worst.max((row[n] - first[n]).abs() / first[n].abs().max(1.0));
        }
    }
    (all, worst)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveChain {
    pub grid: GridCfg,
    /// Cold-plasma data `A^n = eta v^n`.
    pub eta: Profile,
    pub v: Profile,
    #[serde(default = "four")]
    pub order: usize,
    pub s_end: f64,
    pub ds: Option<f64>,
    #[serde(default = "one")]
    pub record_every: usize,
}

pub fn cold_plasma_field(
    grid: PeriodicGrid,
    eta: &Profile,
    v: &Profile,
    order: usize,
) -> MomentField {
    let (e, u) = (eta.sample(&grid), v.sample(&grid));
    let a = (0..=order)
        .map(|n| {
            e.iter()
                .zip(&u)
                .map(|(e, u)| e * u.powi(n as i32))
                .collect()
        })
        .collect();
    MomentField::new(grid, a)
}

pub fn evolve_chain_cmd(cfg: &EvolveChain, ctx: &mut Context) -> CliResult<()> {
    let field = cold_plasma_field(cfg.grid.grid(), &cfg.eta, &cfg.v, cfg.order);
    let opts = ChainOptions {
        ds: cfg.ds,
        record_every: cfg.record_every,
        ..Default::default()
    };
    let hist = evolve_chain(&field, &Closure::ColdPlasma, cfg.s_end, &opts)?;
    write_history(
        ctx,
        &hist,
        Closure::ColdPlasma.name(),
        json!({ "s_end": cfg.s_end }),
    )?;
    let (integrals, drift) = integral_drift(&hist, 2);
    ctx.out.json(
        "integrals.json",
        &json!({ "s": hist.s, "integrals": integrals }),
    )?;
    ctx.check(
        "drift",
        ResidualReport::from_values("conserved_integral_drift", cfg.grid.n, [drift]),
    )
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketCheck {
    pub grid: GridCfg,
    /// Rows `A^0..A^N`.
    pub moments: Vec<Profile>,
    /// Bracket index pairs; default every `(m, n)` with `m + n - 1 <= N`.
    #[serde(default)]
    pub pairs: Vec<[usize; 2]>,
    /// Flow pairs for the commutation check.
    #[serde(default)]
    pub commutation: Vec<[usize; 2]>,
    /// Random test-function pairs drawn from the run seed.
    #[serde(default = "four")]
    pub trials: usize,
}

fn random_trig(rng: &mut ChaCha8Rng, g: &PeriodicGrid) -> Vec<f64> {
    let c: Vec<(f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let q = 2.0 * std::f64::consts::PI / g.length;
    g.sample(|x| {
        c.iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let kx = (k + 1) as f64 * q * x;
                a * kx.cos() + b * kx.sin()
            })
            .sum()
    })
}

pub fn bracket_check(cfg: &BracketCheck, ctx: &mut Context) -> CliResult<()> {
    let g = cfg.grid.grid();
    let field = MomentField::new(g, cfg.moments.iter().map(|p| p.sample(&g)).collect());
    let top = field.order();
    let pairs: Vec<[usize; 2]> = if cfg.pairs.is_empty() {
        (0..=top + 1)
            .flat_map(|m| (0..=top + 1).map(move |n| [m, n]))
            .filter(|[m, n]| m + n >= 1 && m + n - 1 <= top)
            .collect()
    } else {
        cfg.pairs.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let pair = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * g.dx();
    let mut skew = Vec::new();
    for _ in 0..cfg.trials {
        let (f, h) = (random_trig(&mut rng, &g), random_trig(&mut rng, &g));
        for &[m, n] in &pairs {
            let lhs = pair(&f, &km_bracket_apply(&field, m, n, &h)?);
            let rhs = pair(&h, &km_bracket_apply(&field, n, m, &f)?);
            skew.push(lhs + rhs);
        }
    }
    ctx.check("km_skew", ResidualReport::from_values("km_skew", g.n, skew))?;
    if top >= 3 {
        let h = hamiltonian_flow_check(&field)?;
        ctx.check(
            "hamiltonian",
            ResidualReport::from_values("hamiltonian_flow", g.n, [h]),
        )?;
    }
    if !cfg.commutation.is_empty() {
        let values = cfg
            .commutation
            .iter()
            .map(|[m, n]| commutation_check(&field, *m, *n))
            .collect::<Result<Vec<f64>, _>>()?;
        ctx.check(
            "commutation",
            ResidualReport::from_values("commutation", g.n, values),
        )?;
    }
    Ok(())
}
