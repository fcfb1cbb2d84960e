//! Self-similar variables `y = r / sqrt(omega - t)`, `s = -log(omega - t)`
//! around the origin and the Gaussian-weighted local energies built on them.
//!
//! The weighted functionals follow the flat specialization of the surface
//! theory: the metric correction terms vanish identically, and the
//! functionals are evaluated for every `m` even though the monotonicity
//! statements they probe are proved for `m = 2`.

mod cylinder;
mod energy;
mod frame;
mod typeii;

use thiserror::Error;

pub use cylinder::cylinder_energy;
pub use energy::{
    energy_trace, local_energies, monotonicity_report, weighted_integral, Cutoff, EnergyTrace, MonotonicityReport,
};
pub use frame::{to_selfsim, FrameGrid, SelfSimFrame};
pub use typeii::{refined_typeii_functional, GrowthFunction, GrowthPreset, TypeIISeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelfSimError {
    #[error("blowup time {omega} is not after the last snapshot at t = {t_max}")]
    OmegaInconsistent { omega: f64, t_max: f64 },
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("snapshots do not cover the time window [{lo}, {hi}]")]
    WindowUncovered { lo: f64, hi: f64 },
}
