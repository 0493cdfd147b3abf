//! Hydrodynamic reductions in Riemann invariants: Gibbons–Tsarev consistency,
//! the Loewner system, the one-component implicit solution and the
//! conservation laws it generates.

mod fields;
mod gt;
mod n1;
mod sheet;
mod state;
mod system;

pub use fields::{
    conservation_pair_residual, dist_residual, dkp_residual, interior_max, interior_max_on_coarse,
    vertex_flows,
};
pub use gt::{ansatz_residual, gt_residual, tsarev_check, v_consistency, GtResidual, PairResidual};
pub use n1::{n1_solve, N1Fields, N1Point, N1Reduction, RTable};
pub use sheet::{cold_plasma_sheet, ColdPlasmaSheet};
pub use state::{
    ColdPlasma, FnReduction, RGrid, Reduction, ReductionFixture, ReductionSamples, Warped,
    DELTA_SEP,
};
pub use system::{commuting_reduction_velocity, loewner_system_integrate, modified_loewner_check};
