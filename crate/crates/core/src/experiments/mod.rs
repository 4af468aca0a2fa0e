//! The power-estimation harness: null calibration, level and power estimates,
//! and the sweeps over `n`.

mod expectations;
mod neyman_scott;
mod power;
mod single;
mod spacings;
mod theorem1;
mod theorem2;

pub use expectations::{
    floor_of, recalibrate, theorem2_floor_key, Expectations, Pilot, EXPECTATIONS_VERSION,
    SPACINGS_FLOOR_KEY,
};
pub use neyman_scott::{neyman_scott_sweep, random_sign_profile, NeymanScottConfig, NeymanScottRow};
pub use power::{
    calibrate_critical, critical_from_sample, estimate_power, select, AltCase, Critical, GapRow,
    NamedStat, PowerReport, PowerSettings, Sampler, StatFn,
};
pub use single::{alternative_profile, run_power, AltKind, AlternativeSpec, PowerModel};
pub use spacings::{
    spacings_residuals, spacings_sweep, LoglikRow, SpacingsConfig, SpacingsDraw, SpacingsReport,
    SpacingsScaling,
};
pub use theorem1::{orthogonal_lbar_null_samples, theorem1_sweep, Theorem1Config, Theorem1Row};
pub use theorem2::{theorem2_sweep, SweepFamily, Theorem2Config};
