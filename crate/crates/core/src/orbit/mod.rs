//! Orbit-averaged likelihood ratios and the power-minus-level bound.
//!
//! For a test invariant under a group `G`, `E_m T − E₀ T = E₀[T (L̄ − 1)]`
//! where `L̄` is the likelihood ratio averaged over the orbit of the
//! alternative, so `E₀|L̄ − 1|` bounds the gap for every invariant test at once.

mod design;
mod haar;
mod hfun;
mod identity;
mod lbar;

pub use design::{lbar_design_orthogonal, DesignProjector};
pub use haar::haar_orthogonal;
pub use hfun::h_integral_log;
pub use identity::{identity_check, lbar_null_mean, lbar_null_samples, IdentityCheck, OrbitModel};
pub use lbar::{
    lbar_heuristic, lbar_orthogonal, lbar_permutation, log_lbar_orthogonal,
    log_lbar_permutation, permutation_lbar_variance, power_level_bound, GroupKind, OrbitSpec,
    EXHAUSTIVE_MAX_N,
};
