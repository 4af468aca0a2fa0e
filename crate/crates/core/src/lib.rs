//! A Monte Carlo laboratory for the power of invariant tests against
//! contiguous alternatives in many-parameter problems.
//!
//! The modules mirror the workflow: [`model`] samples data and computes
//! likelihood ratios, [`statistics`] holds the test statistics, [`orbit`]
//! averages likelihood ratios over group orbits, [`clt`] studies permutation
//! and bootstrap laws, [`experiments`] runs calibrated power sweeps and
//! [`cli`] is the command-line front end.

pub mod cli;
pub mod clt;
pub mod error;
pub mod experiments;
pub mod model;
pub mod numeric;
pub mod orbit;
pub mod par;
pub mod rng;
pub mod statistics;

pub use error::{Error, Result};
