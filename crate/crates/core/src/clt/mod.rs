//! Permutation and bootstrap laws of weighted sums, the distances between
//! them, and the with/without-replacement coupling.

mod coupling;
mod law;
mod perm;
mod sweep;

pub use coupling::{hajek_bound, hajek_coupling, CouplingDraw, CouplingResult, CouplingScheme};
pub use law::{
    char_fn, cf_inequality, cf_inequality_check, rho0, rho2, uniform_integrability_probe,
    CfInequality, EmpiricalLaw,
};
pub use perm::{
    boot_draw, exhaustive_perm_law, perm_draw, perm_law_moments, sample_boot_law,
    sample_perm_law,
};
pub use sweep::{theorem_convergence_sweep, CltSweepConfig, CltSweepRow, MProfile};
