//! Blowup time estimation, type I / type II classification of the rate,
//! comparison of rescaled states with the bubble, and super-harmonic initial
//! data.

mod bubble;
mod rate;
mod superharmonic;

use thiserror::Error;

use crate::pde::PdeError;
use crate::steady::SteadyError;

pub use bubble::{rescaled_profile_compare, BubbleWindow, MIN_BUBBLE_SLOPE};
pub use rate::{
    classify_rate, estimate_blowup_time, estimate_from_trace, local_blowup_time, BlowupFit, BlowupReport, Classification, RateOptions,
    FIT_RESIDUAL_THRESHOLD,
};
pub use superharmonic::{monotone_in_time_check, superharmonic_data, MonotoneCheck, SuperHarmonicReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlowupError {
    #[error("gradient grew by a factor {growth:e}, at least {required:e} needed")]
    InsufficientGrowth { growth: f64, required: f64 },
    #[error("origin slope {slope} is below the bubble regime")]
    SlopeTooSmall { slope: f64 },
    #[error("Phi_a(R) = {value} is outside (pi/2, pi)")]
    ProfileOutOfRange { value: f64 },
    #[error("differential inequality fails at r = {r}: z = {z:e}")]
    InequalityViolated { r: f64, z: f64 },
    #[error(transparent)]
    Steady(#[from] SteadyError),
    #[error(transparent)]
    Pde(#[from] PdeError),
}
