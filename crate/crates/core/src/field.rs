//! Periodic 1-D grids, spectral derivatives and moment fields.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::series::moments_to_h;

/// Uniform periodic grid `x_j = j L / n`, `j = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicGrid {
    pub n: usize,
    pub length: f64,
}

impl PeriodicGrid {
    pub fn new(n: usize, length: f64) -> Self {
        assert!(
            n >= 2 && length > 0.0,
            "periodic grid needs n >= 2 and positive length"
        );
        PeriodicGrid { n, length }
    }

    /// `n` points on `[0, 2 pi)`.
    pub fn standard(n: usize) -> Self {
        Self::new(n, 2.0 * PI)
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|j| f(self.x(j))).collect()
    }

    /// Second-order centered difference.
    pub fn dx_central(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let h2 = 2.0 * self.dx();
        (0..n)
            .map(|j| (f[(j + 1) % n] - f[(j + n - 1) % n]) / h2)
            .collect()
    }

    /// Trapezoid (spectrally accurate) integral over one period.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.dx()
    }
}

/// FFT-based derivative on a periodic grid; the Nyquist mode is dropped.
#[derive(Clone)]
pub struct Spectral {
    grid: PeriodicGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Spectral({:?})", self.grid)
    }
}

impl Spectral {
    pub fn new(grid: PeriodicGrid) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            grid,
            forward: planner.plan_fft_forward(grid.n),
            inverse: planner.plan_fft_inverse(grid.n),
        }
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        let n = self.grid.n;
        let mut buf: Vec<Complex64> = f.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.forward.process(&mut buf);
        let base = 2.0 * PI / self.grid.length;
        for (k, c) in buf.iter_mut().enumerate() {
            let m = if k < n / 2 {
                k as f64
            } else if n.is_multiple_of(2) && k == n / 2 {
                0.0
            } else {
                k as f64 - n as f64
            };
            *c *= Complex64::new(0.0, base * m / n as f64);
        }
        self.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// Moments `A^0..A^N` on a periodic grid, optionally with `H^0..H^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentField {
    pub grid: PeriodicGrid,
    /// `a[n][j] = A^n(x_j)`.
    pub a: Vec<Vec<f64>>,
    pub h: Option<Vec<Vec<f64>>>,
    /// Set when the source distribution did not decay at its velocity edges.
    pub decay_warning: bool,
}

impl MomentField {
    pub fn new(grid: PeriodicGrid, a: Vec<Vec<f64>>) -> Self {
        MomentField {
            grid,
            a,
            h: None,
            decay_warning: false,
        }
    }

    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    /// Fills `H^n` by pointwise series inversion.
    pub fn with_h(mut self) -> Self {
        let n = self.grid.n;
        let order = self.order();
        let mut h = vec![vec![0.0; n]; order + 1];
        for j in 0..n {
            let col: Vec<f64> = self.a.iter().map(|row| row[j]).collect();
            for (k, v) in moments_to_h(&col).into_iter().enumerate() {
                h[k][j] = v;
            }
        }
        self.h = Some(h);
        self
    }

    /// `I^n = int H^n dx` for every available row.
    pub fn conserved_integrals(&self) -> Vec<f64> {
        let with = if self.h.is_some() {
            self.clone()
        } else {
            self.clone().with_h()
        };
        with.h
            .as_ref()
            .expect("filled above")
            .iter()
            .map(|row| self.grid.integrate(row))
            .collect()
    }
}
