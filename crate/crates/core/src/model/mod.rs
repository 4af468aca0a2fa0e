//! Sampling models, their log-likelihood ratios and contiguity diagnostics.

mod family;
mod mean_vector;
mod neyman_scott;
mod spacings;

pub use family::{
    sample_model, ContiguityDiagnostics, ExpFamily, Family, GeneralFamily, DEFAULT_THETA0,
};
pub use mean_vector::MeanVector;
pub use neyman_scott::{matrix_loglik_ratio, sample_matrix_variate, NeymanScottLayout};
pub use spacings::{
    sample_alternative_points, sample_spacings_alternative, sample_spacings_null,
    spacings_loglik_approx, spacings_loglik_exact, FnProfile, Profile, SpacingsSample,
    TrigProfile,
};
