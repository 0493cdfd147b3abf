//! Shared inputs for the kernel benchmarks.

use loewner_core::field::{MomentField, PeriodicGrid};
use loewner_core::kinetic::{KineticState, VelocityGrid};

/// Cold-plasma moments `A^n = eta v^n` on `n` points.
pub fn cold_plasma(n: usize, order: usize) -> MomentField {
    let g = PeriodicGrid::standard(n);
    let a = (0..=order)
        .map(|m| g.sample(|x| (1.0 + 0.1 * x.cos()) * (0.1 * x.sin()).powi(m as i32)))
        .collect();
    MomentField::new(g, a)
}

/// Shifted Gaussian in `w` with a density modulated in `x`.
pub fn gaussian_state(nx: usize, nw: usize) -> KineticState {
    let x = PeriodicGrid::standard(nx);
    let w = VelocityGrid::symmetric(6.0, nw);
    KineticState::from_fn(w, x, |w, x| {
        (1.0 + 0.2 * x.cos()) * (-(w - 0.3 * x.sin()).powi(2)).exp() / std::f64::consts::PI.sqrt()
    })
    .expect("window is symmetric and positive")
}

/// Random-looking but fixed coefficients `A^0..A^order` of size below one.
pub fn series_coeffs(order: usize) -> Vec<f64> {
    (0..=order)
        .map(|k| ((k as f64 + 1.0) * 0.618).sin() * 0.5)
        .collect()
}
