//! Half-entire steady profiles `Phi_a` of the stationary equation
//!
//! ```text
//! Phi'' + (m-1) Phi' / r - (m-1) sin(2 Phi) / (2 r^2) = 0,  Phi(0) = 0, Phi'(0) = a
//! ```
//!
//! computed by shooting from the origin, plus the phase-plane reduction
//! `w(Phi) = (r Phi')^2` used as an independent cross-check.

mod export;
mod phase;
mod reference;
mod shoot;

use thiserror::Error;

pub use export::{profile_header, write_profile_csv, ProfileHeader};
pub use phase::{radius_from_w, solve_w_branch, Branch, BranchOptions, PhasePlaneSolution};
pub use reference::{
    reference_thresholds, threshold_study, StudyEntry, ThresholdReference, ThresholdTable, STUDY_SLOPES,
    STUDY_TOLERANCES,
};
pub use shoot::{
    crossing_count, extrema_sequence, shoot_profile, shoot_profile_with, shoot_with_extrema,
    theta_threshold, Extremum, Shooter, SteadyProfile, PROFILE_ZERO_TOL,
};

use crate::ode::OdeError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteadyError {
    #[error("invalid shooting input: {0}")]
    InvalidInput(String),
    #[error("no extremum found up to r = {r_max:e}")]
    HorizonTooSmall { r_max: f64 },
    #[error("integrator step size collapsed at r = {r:e}")]
    StepUnderflow { r: f64 },
    #[error("profile has {found} extrema, {requested} requested")]
    NotEnoughExtrema { found: usize, requested: usize },
    #[error("threshold angle only exists for 3 <= m < 7, got m = {0}")]
    UnsupportedDimension(u32),
    #[error("w-branch does not close at the expected endpoint: expected {expected}, found {found}")]
    BranchMismatch { expected: f64, found: f64 },
    #[error("radius integral diverges at branch endpoint {phi}")]
    QuadratureDivergence { phi: f64 },
    #[error("integration failed: {0}")]
    Integration(OdeError),
}

impl SteadyError {
    fn from_ode(e: OdeError) -> Self {
        match e {
            OdeError::StepUnderflow { t, .. } => SteadyError::StepUnderflow { r: t.exp() },
            other => SteadyError::Integration(other),
        }
    }
}
