//! Dispersionless Benney hierarchy: truncated series, Faber polynomials,
//! Loewner evolution, kinetic Vlasov solver and hydrodynamic reductions.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod faber;
pub mod field;
pub mod hierarchy;
pub mod kinetic;
pub mod loewner;
pub mod ode;
pub mod reduction;
pub mod report;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
pub use faber::FaberPolynomial;
pub use report::ResidualReport;
pub use scalar::{Poly, Rational, Scalar, TrigPoly};
pub use series::{AsymptoticSeries, LaurentSeries, LaxPolynomial};
