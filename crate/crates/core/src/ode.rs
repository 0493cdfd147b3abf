//! Dormand–Prince 5(4) adaptive integrator on real state vectors.
//!
//! Time may run backward (`t1 < t0`). A caller-supplied cap bounds the step
//! magnitude from the current state, and an observer may stop the run after
//! any accepted step.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Debug)]
pub struct Dp45 {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; `0` selects one automatically.
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Dp45 {
    fn default() -> Self {
        Dp45 {
            rtol: 1e-11,
            atol: 1e-13,
            h_init: 0.0,
            h_min: 1e-15,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OdeOutcome {
    pub t: f64,
    pub y: Vec<f64>,
    /// The observer asked to stop before `t1`.
    pub stopped: bool,
    pub accepted: usize,
    pub rejected: usize,
    /// Magnitude of the last successful step; useful to warm-start a
    /// continuation.
    pub last_h: f64,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Dp45 {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Dp45 {
            rtol,
            atol,
            ..Default::default()
        }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1`.
    ///
    /// `cap(t, y)` returns the largest admissible step magnitude at the
    /// current state (use `f64::INFINITY` for none).
    pub fn integrate<F, Cap, Obs>(
        &self,
        mut f: F,
        t0: f64,
        y0: &[f64],
        t1: f64,
        mut cap: Cap,
        mut observe: Obs,
    ) -> Result<OdeOutcome>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
        Cap: FnMut(f64, &[f64]) -> f64,
        Obs: FnMut(f64, &[f64]) -> Control,
    {
        let dim = y0.len();
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let span = (t1 - t0).abs();
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut out = OdeOutcome {
            t,
            y: y.clone(),
            stopped: false,
            accepted: 0,
            rejected: 0,
            last_h: 0.0,
        };
        if span == 0.0 {
            return Ok(out);
        }
        let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
        let mut tmp = vec![0.0; dim];
        let mut y5 = vec![0.0; dim];
        f(t, &y, &mut k[0])?;
        let mut h = if self.h_init > 0.0 {
            self.h_init
        } else {
            let scale: f64 = y
                .iter()
                .map(|v| self.atol + self.rtol * v.abs())
                .fold(f64::INFINITY, f64::min);
            let d: f64 = k[0].iter().map(|v| v.abs()).fold(0.0, f64::max);
            if d > 0.0 {
                (0.01 * (scale / d).powf(0.2) * span.max(1e-3)).min(span * 0.1)
            } else {
                span * 0.1
            }
        };
        let mut steps = 0usize;
        loop {
            let remaining = (t1 - t) * dir;
            if remaining <= span * 1e-15 {
                break;
            }
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integration {
                    t,
                    reason: format!("step budget {} exhausted", self.max_steps),
                });
            }
            let limit = cap(t, &y);
            if limit.is_finite() {
                h = h.min(limit);
            }
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            if h < self.h_min && !last {
                return Err(Error::Integration {
                    t,
                    reason: format!("step size {h:e} below minimum"),
                });
            }
            let hs = h * dir;
            let mut stage_ok = true;
            for s in 1..7 {
                for i in 0..dim {
                    let mut acc = y[i];
                    for (j, a) in A[s][..s].iter().enumerate() {
                        acc += hs * a * k[j][i];
                    }
                    tmp[i] = acc;
                }
                let (_, tail) = k.split_at_mut(s);
                if f(t + C[s] * hs, &tmp, &mut tail[0]).is_err()
                    || tail[0].iter().any(|v| !v.is_finite())
                {
                    stage_ok = false;
                    break;
                }
            }
            let err = if stage_ok {
                let mut acc = 0.0;
                for i in 0..dim {
                    let mut v5 = y[i];
                    let mut e = 0.0;
                    for s in 0..7 {
                        v5 += hs * B5[s] * k[s][i];
                        e += hs * (B5[s] - B4[s]) * k[s][i];
                    }
                    y5[i] = v5;
                    let sc = self.atol + self.rtol * y[i].abs().max(v5.abs());
                    acc += (e / sc).powi(2);
                }
                (acc / dim.max(1) as f64).sqrt()
            } else {
                f64::INFINITY
            };
            if err <= 1.0 {
                t = if last { t1 } else { t + hs };
                std::mem::swap(&mut y, &mut y5);
                // FSAL: the seventh stage is f at the new point.
                k.swap(0, 6);
                out.accepted += 1;
                out.last_h = h;
                if observe(t, &y) == Control::Stop {
                    out.stopped = true;
                    break;
                }
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                h *= fac;
            } else {
                out.rejected += 1;
                let fac = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.25
                };
                h *= fac;
                if h < self.h_min {
                    return Err(Error::Integration {
                        t,
                        reason: format!("step size underflow (h = {h:e}, error ratio {err:e})"),
                    });
                }
            }
        }
        out.t = t;
        out.y = y;
        Ok(out)
    }

    /// Plain integration without cap or observer.
    pub fn solve<F>(&self, f: F, t0: f64, y0: &[f64], t1: f64) -> Result<Vec<f64>>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        Ok(self
            .integrate(
                f,
                t0,
                y0,
                t1,
                |_, _| f64::INFINITY,
                |_, _| Control::Continue,
            )?
            .y)
    }
}

/// One classical fourth-order Runge–Kutta step for autonomous systems.
pub fn rk4_step<F>(f: &mut F, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let k1 = f(y)?;
    let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
    let k2 = f(&y2)?;
    let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
    let k3 = f(&y3)?;
    let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
    let k4 = f(&y4)?;
    Ok((0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = Dp45::default()
            .solve(
                |_, y, d| {
                    d[0] = -y[0];
                    Ok(())
                },
                0.0,
                &[1.0],
                2.0,
            )
            .unwrap();
        assert!((y[0] - (-2f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn backward_harmonic_oscillator() {
        let y = Dp45::default()
            .solve(
                |_, y, d| {
                    d[0] = y[1];
                    d[1] = -y[0];
                    Ok(())
                },
                3.0,
                &[3f64.cos(), -3f64.sin()],
                0.0,
            )
            .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
    }

    #[test]
    fn observer_stops_early() {
        let out = Dp45::default()
            .integrate(
                |_, _, d| {
                    d[0] = 1.0;
                    Ok(())
                },
                0.0,
                &[0.0],
                10.0,
                |_, _| 0.5,
                |_, y| {
                    if y[0] > 2.0 {
                        Control::Stop
                    } else {
                        Control::Continue
                    }
                },
            )
            .unwrap();
        assert!(out.stopped);
        assert!(out.t > 2.0 && out.t <= 2.5 + 1e-12);
    }

    #[test]
    fn finite_time_blowup_is_reported() {
        let r = Dp45::default().solve(
            |_, y, d| {
                d[0] = y[0] * y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            2.0,
        );
        assert!(matches!(r, Err(Error::Integration { .. })));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let run = |n: usize| {
            let mut y = vec![1.0];
            let mut f = |y: &[f64]| Ok(vec![y[0]]);
            for _ in 0..n {
                y = rk4_step(&mut f, &y, 1.0 / n as f64).unwrap();
            }
            (y[0] - 1f64.exp()).abs()
        };
        let ratio = run(20) / run(40);
        assert!(ratio > 14.0 && ratio < 18.0);
    }
}
