//! dKP hierarchy flows on moment fields, Benney chain evolution and the
//! Zabolotskaya-Khokhlov / modified-chain residuals.

mod chain;
mod flows;
mod modified;
mod spacetime;

pub use chain::{evolve_chain, ChainOptions, Closure, ColumnFn};
pub use flows::{
    commutation_check, commutation_check_with, conserved_integrals, hamiltonian_flow_check,
    hamiltonian_flow_with, km_bracket_apply, km_bracket_apply_with, lax_flow, lax_flow_with,
    CentralDx, HierarchyTimes, TimeConvention, TrigDx, XDerivative,
};
pub use modified::{modified_chain_residual, modified_substitution, ModifiedMomentField};
pub use spacetime::{mdkp_residual, zk_residual, Interior, SpaceTimeField};
