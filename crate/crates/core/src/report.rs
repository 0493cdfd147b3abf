use serde::{Deserialize, Serialize};

/// Max and RMS of a residual over a sample set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub op: String,
    pub max: f64,
    pub l2: f64,
    pub grid: usize,
}

impl ResidualReport {
    pub fn from_values<I: IntoIterator<Item = f64>>(op: &str, grid: usize, values: I) -> Self {
        let mut max = 0.0f64;
        let mut sq = 0.0;
        let mut n = 0usize;
        for v in values {
            let a = v.abs();
            max = if a.is_nan() { f64::NAN } else { max.max(a) };
            sq += a * a;
            n += 1;
        }
        ResidualReport {
            op: op.to_string(),
            max,
            l2: if n == 0 { 0.0 } else { (sq / n as f64).sqrt() },
            grid,
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max.is_finite() && self.max < tol
    }
}

/// Observed convergence order from errors at successively halved steps.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
