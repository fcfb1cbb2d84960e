//! Domain types for the equivariant reduction: flow parameters, radial grids,
//! flow states, energy densities and the domain metric.
//!
//! A corotational map `u(x,t) = (x/|x| sin(theta), cos(theta))` is described
//! by the angle `theta(r,t)` on `[0, R]` with `theta(0,t) = 0` and
//! `theta(R,t) = b`. Angles are stored unnormalized (no reduction mod 2 pi):
//! zero counting and the blowup criteria need the continuous branch.

mod energy;
mod grid;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use energy::{
    dirichlet_energy, energy_density, flow_energy, origin_slope, radial_derivative, sphere_area,
};
pub use grid::{CellWeights, GridError, RadialGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension m must be at least 2, got {0}")]
    Dimension(u32),
    #[error("domain radius must be positive, got {0}")]
    Radius(f64),
    #[error("initial data incompatible with boundary values: {0}")]
    Compatibility(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Domain metric of the radial flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Flat,
    /// Stereographic chart of the round sphere, `g(r) = (1 + r^2)^{-2}`.
    SphereStereographic,
}

/// Inverse conformal factor `g^{-1}(r)` multiplying the flow's right-hand side.
pub fn metric_factor(r: f64, metric: Metric) -> f64 {
    match metric {
        Metric::Flat => 1.0,
        Metric::SphereStereographic => {
            let q = 1.0 + r * r;
            q * q
        }
    }
}

/// Initial angle profile. Resolved onto a grid by [`crate::pde::initial_state`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// `theta_0(r) = b r / R`.
    Linear,
    /// The steady profile `Phi_a` restricted to `[0, R]`; requires `b = Phi_a(R)`.
    Profile { a: f64 },
    /// `Phi_a(r) + beta r` with `beta = (b - Phi_a(R)) / R >= 0`, a
    /// sub-solution of the stationary equation.
    SuperHarmonic { a: f64 },
    /// Explicit samples, interpolated monotonically; must start at `(0, 0)` and
    /// end at `(R, b)`.
    Tabulated { r: Vec<f64>, theta: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub m: u32,
    pub radius: f64,
    pub b: f64,
    pub metric: Metric,
    pub initial_data: InitialData,
}

impl FlowParams {
    pub fn new(m: u32, radius: f64, b: f64, metric: Metric, initial_data: InitialData) -> Result<Self, ModelError> {
        let p = Self { m, radius, b, metric, initial_data };
        p.validate()?;
        Ok(p)
    }

    pub fn flat_linear(m: u32, radius: f64, b: f64) -> Self {
        Self { m, radius, b, metric: Metric::Flat, initial_data: InitialData::Linear }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.m < 2 {
            return Err(ModelError::Dimension(self.m));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(ModelError::Radius(self.radius));
        }
        if let InitialData::Tabulated { r, theta } = &self.initial_data {
            if r.len() != theta.len() || r.len() < 2 {
                return Err(ModelError::Compatibility("tabulated data needs matching r/theta with >= 2 samples".into()));
            }
            if r[0] != 0.0 || theta[0] != 0.0 {
                return Err(ModelError::Compatibility("tabulated data must start at (0, 0)".into()));
            }
            let last = r.len() - 1;
            if (r[last] - self.radius).abs() > 1e-12 * self.radius || theta[last] != self.b {
                return Err(ModelError::Compatibility("tabulated data must end at (R, b)".into()));
            }
            if r.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(ModelError::Compatibility("tabulated radii must increase".into()));
            }
        }
        Ok(())
    }
}

/// The angle on a grid at one time. `theta_r` is kept consistent with
/// `theta` through [`radial_derivative`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub grid: Arc<RadialGrid>,
    pub theta: Vec<f64>,
    pub theta_r: Vec<f64>,
}

impl FlowState {
    /// Builds a state, forcing `theta[0] = 0` and `theta[N] = b` and computing
    /// the derivative.
    pub fn new(t: f64, grid: Arc<RadialGrid>, mut theta: Vec<f64>, b: f64) -> Self {
        assert_eq!(theta.len(), grid.nodes().len());
        theta[0] = 0.0;
        *theta.last_mut().unwrap() = b;
        let theta_r = radial_derivative(grid.nodes(), &theta);
        Self { t, grid, theta, theta_r }
    }

    pub fn r(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn boundary_value(&self) -> f64 {
        *self.theta.last().unwrap()
    }

    /// `sup_r |theta_r|`, the gradient monitor `m(t)`.
    pub fn gradient_sup(&self) -> f64 {
        self.theta_r.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn origin_slope(&self) -> f64 {
        self.theta_r[0]
    }

    /// Reflection `theta -> -theta`, a symmetry of the flow.
    pub fn negated(&self) -> Self {
        Self {
            t: self.t,
            grid: self.grid.clone(),
            theta: self.theta.iter().map(|v| -v).collect(),
            theta_r: self.theta_r.iter().map(|v| -v).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_factor_values() {
        assert_eq!(metric_factor(0.5, Metric::Flat), 1.0);
        assert_eq!(metric_factor(0.0, Metric::SphereStereographic), 1.0);
        assert_eq!(metric_factor(1.0, Metric::SphereStereographic), 4.0);
        for k in 0..=100 {
            let r = k as f64 / 100.0;
            let g = 1.0 / metric_factor(r, Metric::SphereStereographic);
            assert!((0.25..=1.0).contains(&g));
            assert!(metric_factor(r, Metric::SphereStereographic) >= 1.0);
        }
    }

    #[test]
    fn params_validation() {
        assert!(FlowParams::new(1, 1.0, 1.0, Metric::Flat, InitialData::Linear).is_err());
        assert!(FlowParams::new(3, 0.0, 1.0, Metric::Flat, InitialData::Linear).is_err());
        let bad = InitialData::Tabulated { r: vec![0.0, 0.5, 1.0], theta: vec![0.0, 0.2, 0.9] };
        assert!(FlowParams::new(3, 1.0, 1.0, Metric::Flat, bad).is_err());
        let good = InitialData::Tabulated { r: vec![0.0, 0.5, 1.0], theta: vec![0.0, 0.2, 1.0] };
        assert!(FlowParams::new(3, 1.0, 1.0, Metric::Flat, good).is_ok());
    }

    #[test]
    fn state_forces_boundary_values() {
        let g = Arc::new(RadialGrid::uniform(1.0, 10).unwrap());
        let s = FlowState::new(0.0, g, vec![0.3; 11], 2.0);
        assert_eq!(s.theta[0], 0.0);
        assert_eq!(s.boundary_value(), 2.0);
    }
}
