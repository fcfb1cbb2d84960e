//! Comparison and estimate functionals evaluated on flow traces.

mod audit;
mod gradient;
mod intersection;
mod slope;
mod zeros;

use thiserror::Error;

pub use audit::{energy_dissipation_audit, AuditInterval, EnergyAudit};
pub use gradient::{gradient_bound_fit, gradient_bound_fit_eternal, GradientBoundFit};
pub use intersection::{intersection_series, state_difference, Reference, ZeroCountSeries};
pub use slope::{origin_slope_series, OriginSlopeSeries, TailKind, DEFAULT_FLAT_RATE};
pub use zeros::{zero_number, DEFAULT_ZERO_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("every sample is below the zero tolerance")]
    AllBelowTolerance,
}
