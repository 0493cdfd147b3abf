//! Driving data: branch positions, weights and the capacity schedule.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function of time with an exact derivative.
#[derive(Clone)]
pub enum TimeFunction {
    Const(f64),
    /// `offset + rate * t`
    Linear {
        offset: f64,
        rate: f64,
    },
    /// Piecewise linear through `(t[i], values[i])`, constant beyond the ends.
    Samples {
        t: Vec<f64>,
        values: Vec<f64>,
    },
    Custom {
        f: RealFn,
        df: RealFn,
    },
}

impl fmt::Debug for TimeFunction {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFunction::Const(v) => write!(fm, "Const({v})"),
            TimeFunction::Linear { offset, rate } => write!(fm, "Linear({offset} + {rate} t)"),
            TimeFunction::Samples { t, .. } => write!(fm, "Samples({} knots)", t.len()),
            TimeFunction::Custom { .. } => write!(fm, "Custom"),
        }
    }
}

impl TimeFunction {
    pub fn linear(rate: f64) -> Self {
        TimeFunction::Linear { offset: 0.0, rate }
    }

    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TimeFunction::Custom {
            f: Arc::new(f),
            df: Arc::new(df),
        }
    }

    pub fn samples(t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if t.len() != values.len() || t.len() < 2 {
            return Err(Error::Precondition(
                "samples need matching `t` and `values` with at least two entries".into(),
            ));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition(
                "sample times must increase strictly".into(),
            ));
        }
        if t.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Precondition("samples must be finite".into()));
        }
        Ok(TimeFunction::Samples { t, values })
    }

    fn segment(t: &[f64], x: f64) -> usize {
        match t.iter().position(|&k| k > x) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => t.len() - 2,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TimeFunction::Const(v) => *v,
            TimeFunction::Linear { offset, rate } => offset + rate * x,
            TimeFunction::Samples { t, values } => {
                if x <= t[0] {
                    return values[0];
                }
                if x >= t[t.len() - 1] {
                    return values[values.len() - 1];
                }
                let i = Self::segment(t, x);
                let a = (x - t[i]) / (t[i + 1] - t[i]);
                values[i] + a * (values[i + 1] - values[i])
            }
            TimeFunction::Custom { f, .. } => f(x),
        }
    }

    /// Right derivative at `x`.
    pub fn derivative(&self, x: f64) -> f64 {
        self.derivative_within(x, x)
    }

    /// Derivative at `x` where a sampled function uses the segment containing
    /// `piece_mid`. Integrators pass the midpoint of the current smooth piece
    /// so stages that land on a knot see the slope of their own piece.
    pub fn derivative_within(&self, x: f64, piece_mid: f64) -> f64 {
        match self {
            TimeFunction::Const(_) => 0.0,
            TimeFunction::Linear { rate, .. } => *rate,
            TimeFunction::Samples { t, values } => {
                if piece_mid < t[0] || piece_mid >= t[t.len() - 1] {
                    return 0.0;
                }
                let i = Self::segment(t, piece_mid);
                (values[i + 1] - values[i]) / (t[i + 1] - t[i])
            }
            TimeFunction::Custom { df, .. } => df(x),
        }
    }

    /// Points where the derivative may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            TimeFunction::Samples { t, .. } => t.clone(),
            _ => Vec::new(),
        }
    }

    pub fn negated(&self) -> Self {
        match self {
            TimeFunction::Const(v) => TimeFunction::Const(-v),
            TimeFunction::Linear { offset, rate } => TimeFunction::Linear {
                offset: -offset,
                rate: -rate,
            },
            TimeFunction::Samples { t, values } => TimeFunction::Samples {
                t: t.clone(),
                values: values.iter().map(|v| -v).collect(),
            },
            TimeFunction::Custom { f, df } => {
                let (f, df) = (f.clone(), df.clone());
                TimeFunction::custom(move |x| -f(x), move |x| -df(x))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum TaggedFunction {
    #[serde(rename = "const")]
    Const {
        value: f64,
    },
    Linear {
        #[serde(default)]
        offset: f64,
        rate: f64,
    },
    Samples {
        t: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FunctionRepr {
    Number(f64),
    Tagged(TaggedFunction),
}

impl Serialize for TimeFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let tagged = match self {
            TimeFunction::Const(v) => TaggedFunction::Const { value: *v },
            TimeFunction::Linear { offset, rate } => TaggedFunction::Linear {
                offset: *offset,
                rate: *rate,
            },
            TimeFunction::Samples { t, values } => TaggedFunction::Samples {
                t: t.clone(),
                values: values.clone(),
            },
            TimeFunction::Custom { .. } => {
                return Err(serde::ser::Error::custom(
                    "custom time functions are not serializable",
                ))
            }
        };
        tagged.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TimeFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        check_function_keys(&value).map_err(serde::de::Error::custom)?;
        let repr: FunctionRepr = serde_json::from_value(value).map_err(serde::de::Error::custom)?;
        match repr {
            FunctionRepr::Number(v) => Ok(TimeFunction::Const(v)),
            FunctionRepr::Tagged(TaggedFunction::Const { value }) => Ok(TimeFunction::Const(value)),
            FunctionRepr::Tagged(TaggedFunction::Linear { offset, rate }) => {
                Ok(TimeFunction::Linear { offset, rate })
            }
            FunctionRepr::Tagged(TaggedFunction::Samples { t, values }) => {
                TimeFunction::samples(t, values).map_err(serde::de::Error::custom)
            }
        }
    }
}

// Internally tagged enums cannot deny unknown fields, so check by hand.
fn check_function_keys(v: &serde_json::Value) -> std::result::Result<(), String> {
    let Some(obj) = v.as_object() else {
        return Ok(());
    };
    let allowed: &[&str] = match obj.get("kind").and_then(|k| k.as_str()) {
        Some("const") => &["kind", "value"],
        Some("linear") => &["kind", "offset", "rate"],
        Some("samples") => &["kind", "t", "values"],
        Some(other) => return Err(format!("unknown function kind `{other}`")),
        None => return Err("function object needs a `kind`".into()),
    };
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(format!("unknown field `{k}` in time function")),
        None => Ok(()),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub xi: TimeFunction,
    /// Missing weights are filled with an equal split.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<TimeFunction>,
}

/// Branch positions, weights and capacity schedule on `[0, t_end]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivingSpec {
    pub branches: Vec<Branch>,
    #[serde(default = "default_hcap")]
    pub hcap: TimeFunction,
    pub t_end: f64,
}

fn default_hcap() -> TimeFunction {
    TimeFunction::linear(2.0)
}

impl DrivingSpec {
    /// One branch with the standard schedule `hcap = 2t`.
    pub fn single(xi: TimeFunction, t_end: f64) -> Self {
        DrivingSpec {
            branches: vec![Branch { xi, weight: None }],
            hcap: default_hcap(),
            t_end,
        }
    }

    pub fn with_hcap(mut self, hcap: TimeFunction) -> Self {
        self.hcap = hcap;
        self
    }

    pub fn multi(
        branches: Vec<(TimeFunction, TimeFunction)>,
        hcap: TimeFunction,
        t_end: f64,
    ) -> Self {
        DrivingSpec {
            branches: branches
                .into_iter()
                .map(|(xi, w)| Branch {
                    xi,
                    weight: Some(w),
                })
                .collect(),
            hcap,
            t_end,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: DrivingSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn m(&self) -> usize {
        self.branches.len()
    }

    pub fn xi(&self, k: usize, t: f64) -> f64 {
        self.branches[k].xi.eval(t)
    }

    pub fn weight(&self, k: usize, t: f64) -> f64 {
        match &self.branches[k].weight {
            Some(w) => w.eval(t),
            None => 1.0 / self.m() as f64,
        }
    }

    pub fn hcap(&self, t: f64) -> f64 {
        self.hcap.eval(t)
    }

    /// `dA^0/dt = -hcap'(t)`.
    pub fn da0_dt(&self, t: f64) -> f64 {
        -self.hcap.derivative(t)
    }

    /// Smooth pieces of `[a, b]` (either order) split at every knot of every
    /// sampled function.
    pub fn pieces(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mut knots: Vec<f64> = self
            .branches
            .iter()
            .flat_map(|br| {
                let mut k = br.xi.breakpoints();
                if let Some(w) = &br.weight {
                    k.extend(w.breakpoints());
                }
                k
            })
            .chain(self.hcap.breakpoints())
            .filter(|&k| k > lo && k < hi)
            .collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut pts = vec![lo];
        pts.extend(knots);
        pts.push(hi);
        let mut out: Vec<(f64, f64)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
        if a > b {
            out = out.into_iter().rev().map(|(x, y)| (y, x)).collect();
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.branches.is_empty() {
            return Err(Error::Precondition(
                "at least one branch is required".into(),
            ));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Precondition(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if self.hcap(0.0).abs() > 1e-12 {
            return Err(Error::Precondition(format!(
                "hcap(0) = {} must vanish",
                self.hcap(0.0)
            )));
        }
        let mut grid: Vec<f64> = (0..=200).map(|i| self.t_end * i as f64 / 200.0).collect();
        for (a, b) in self.pieces(0.0, self.t_end) {
            grid.push(0.5 * (a + b));
        }
        for &t in &grid {
            if self.hcap.derivative(t) < -1e-12 {
                return Err(Error::Precondition(format!("hcap decreases near t = {t}")));
            }
            let mut total = 0.0;
            for k in 0..self.m() {
                let w = self.weight(k, t);
                if w < -1e-12 {
                    return Err(Error::Precondition(format!(
                        "weight {k} negative at t = {t}"
                    )));
                }
                total += w;
                if !self.xi(k, t).is_finite() {
                    return Err(Error::Precondition(format!("xi_{k} not finite at t = {t}")));
                }
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Precondition(format!(
                    "weights sum to {total} at t = {t}"
                )));
            }
        }
        Ok(())
    }

    /// The spec with every driving function negated.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        for b in &mut out.branches {
            b.xi = b.xi.negated();
        }
        out
    }
}
