//! Numerical laboratory for the equivariant harmonic map heat flow
//!
//! ```text
//! theta_t = g^{-1}(r) (theta_rr + (m-1)/r theta_r - (m-1)/(2 r^2) sin(2 theta))
//! ```
//!
//! on a ball of radius `R` with `theta(0,t) = 0`, `theta(R,t) = b`.
//!
//! * [`model`]: parameters, grids, states and energies;
//! * [`steady`]: shooting for the steady profiles `Phi_a` and the phase plane;
//! * [`pde`]: the adaptive IMEX solver;
//! * [`diagnostics`]: zero numbers, origin slope, gradient bounds, energy audit;
//! * [`selfsim`]: self-similar frames and Gaussian-weighted local energies;
//! * [`blowup`]: blowup time, rate classification, bubble comparison;
//! * [`harness`]: scenarios, presets, run directories and sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod diagnostics;
pub mod harness;
pub mod interp;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod pde;
pub mod quad;
pub mod selfsim;
pub mod steady;

pub use model::{FlowParams, FlowState, InitialData, Metric, RadialGrid};
pub use steady::SteadyProfile;
