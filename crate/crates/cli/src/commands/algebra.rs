use loewner_core::faber::{faber_all, faber_via_log};
use loewner_core::scalar::{parse_rational, rational_to_f64, Rational};
use loewner_core::series::{compose, invert, JsonCoefficient};
use loewner_core::{AsymptoticSeries, ResidualReport, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::artifacts::Context;
use crate::error::CliResult;

/// A coefficient list kept exact when every entry is an integer or a `"p/q"` string.
#[derive(Clone, Debug)]
pub enum Coefficients {
    Exact(Vec<Rational>),
    Float(Vec<f64>),
}

impl<'de> Deserialize<'de> for Coefficients {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw: Vec<Value> = Vec::deserialize(d)?;
        if raw.is_empty() {
            return Err(D::Error::custom("coefficient list is empty"));
        }
        let exact: Option<Vec<Rational>> = raw
            .iter()
            .map(|v| match v {
                Value::String(s) => parse_rational(s),
                Value::Number(n) => n.as_i64().map(|i| Rational::from_integer(i.into())),
                _ => None,
            })
            .collect();
        if let Some(e) = exact {
            return Ok(Coefficients::Exact(e));
        }
        raw.iter()
            .map(|v| match v {
                Value::Number(n) => n
                    .as_f64()
                    .ok_or_else(|| D::Error::custom(format!("bad number {n}"))),
                Value::String(s) => parse_rational(s)
                    .map(|r| rational_to_f64(&r))
                    .ok_or_else(|| D::Error::custom(format!("bad coefficient \"{s}\""))),
                other => Err(D::Error::custom(format!("bad coefficient {other}"))),
            })
            .collect::<Result<Vec<f64>, _>>()
            .map(Coefficients::Float)
    }
}

impl Coefficients {
    pub fn len(&self) -> usize {
        match self {
            Coefficients::Exact(c) => c.len(),
            Coefficients::Float(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Coefficients::Exact(c) => c.iter().map(rational_to_f64).collect(),
            Coefficients::Float(c) => c.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertSeries {
    /// `A^0..A^N` of `lambda = z + sum A^n z^{-(n+1)}`.
    pub coeffs: Coefficients,
    /// Optional; must equal `coeffs.len() - 1` when given.
    pub order: Option<usize>,
}

/// Max |coefficient| of `lambda(z(lambda)) - lambda`.
fn round_trip<S: Scalar>(
    lambda: &AsymptoticSeries<S>,
    inv: &AsymptoticSeries<S>,
    abs: impl Fn(&S) -> f64,
) -> Vec<f64> {
    let id = compose(lambda, inv, lambda.order());
    std::iter::once(abs(id.const_term()))
        .chain(id.coeffs().iter().map(abs))
        .collect()
}

fn inversion_json<S: JsonCoefficient>(
    lambda: &AsymptoticSeries<S>,
) -> CliResult<(Value, AsymptoticSeries<S>)> {
    let inv = invert(lambda)?;
    let h: Vec<Value> = inv
        .h_coefficients()
        .iter()
        .map(JsonCoefficient::to_json)
        .collect();
    Ok((
        json!({ "lambda": lambda.to_json(), "inverse": inv.to_json(), "h": h }),
        inv,
    ))
}

pub fn invert_series(cfg: &InvertSeries, ctx: &mut Context) -> CliResult<()> {
    if let Some(order) = cfg.order {
        if order + 1 != cfg.coeffs.len() {
            return Err(loewner_core::Error::Format(format!(
                "order {order} needs {} coefficients, got {}",
                order + 1,
                cfg.coeffs.len()
            ))
            .into());
        }
    }
    let (mut doc, residual) = match &cfg.coeffs {
        Coefficients::Exact(c) => {
            let lambda = AsymptoticSeries::new(c.clone());
            let (doc, inv) = inversion_json(&lambda)?;
            (doc, round_trip(&lambda, &inv, |r| rational_to_f64(r).abs()))
        }
        Coefficients::Float(c) => {
            let lambda = AsymptoticSeries::new(c.clone());
            let (doc, inv) = inversion_json(&lambda)?;
            (doc, round_trip(&lambda, &inv, |v| v.abs()))
        }
    };
    doc["arithmetic"] = json!(match cfg.coeffs {
        Coefficients::Exact(_) => "rational",
        Coefficients::Float(_) => "float",
    });
    ctx.out.json("inverse.json", &doc)?;
    ctx.check(
        "round_trip",
        ResidualReport::from_values("compose_invert", cfg.coeffs.len(), residual),
    )
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Faber {
    /// `b_1, b_2, ...` of `g(w) = w + sum b_n w^{-n}`.
    pub b: Coefficients,
    pub n_max: usize,
    /// Points where the recurrence is compared with the logarithmic extraction.
    #[serde(default)]
    pub xi: Vec<f64>,
    /// Extra random maps with `sum |b_n| <= 0.5` drawn from the run seed.
    #[serde(default)]
    pub random_maps: usize,
}

/// `|Phi_n(xi)|` differences between both constructions, `n = 0..=n_max`.
fn dual_differences(b: &[f64], xi: f64, n_max: usize) -> CliResult<Vec<f64>> {
    let rec = faber_all(b, n_max)?;
    let log = faber_via_log(&AsymptoticSeries::new(b.to_vec()), xi, n_max)?;
    Ok(rec
        .iter()
        .zip(&log)
        .map(|(p, l)| (p.eval(xi) - l).abs() / l.abs().max(1.0))
        .collect())
}

pub fn faber(cfg: &Faber, ctx: &mut Context) -> CliResult<()> {
    let polys: Vec<Value> = match &cfg.b {
        Coefficients::Exact(b) => faber_all(b, cfg.n_max)?
            .iter()
            .map(|p| p.to_json())
            .collect(),
        Coefficients::Float(b) => faber_all(b, cfg.n_max)?
            .iter()
            .map(|p| p.to_json())
            .collect(),
    };
    ctx.out
        .json("faber.json", &json!({ "polynomials": polys }))?;
    if cfg.xi.is_empty() && cfg.random_maps == 0 {
        return Ok(());
    }
    let b = cfg.b.to_f64();
    let mut values = Vec::new();
    for &xi in &cfg.xi {
        values.extend(dual_differences(&b, xi, cfg.n_max)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    for _ in 0..cfg.random_maps {
        let raw: Vec<f64> = (0..cfg.n_max.max(1))
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let total: f64 = raw.iter().map(|v| v.abs()).sum();
        let scale = rng.gen_range(0.0..0.5) / total.max(1e-300);
        let bm: Vec<f64> = raw.iter().map(|v| v * scale).collect();
        let xi = rng.gen_range(-1.0..1.0);
        values.extend(dual_differences(&bm, xi, cfg.n_max)?);
    }
    ctx.check(
        "faber_dual",
        ResidualReport::from_values("faber_dual", cfg.n_max, values),
    )
}
