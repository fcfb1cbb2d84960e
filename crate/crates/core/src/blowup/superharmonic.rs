use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::model::{FlowState, RadialGrid};
use crate::pde::{superharmonic_profile, FlowTrace};
use crate::steady::theta_threshold;

use super::BlowupError;

/// Verification of `theta_0 = Phi_a + beta r` against the stationary
/// inequality `z = theta'' + (m-1) theta' / r - (m-1) sin(2 theta) / (2 r^2) >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperHarmonicReport {
    pub m: u32,
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    /// `Phi_a(R)`.
    pub profile_end: f64,
    pub theta_threshold: f64,
    /// Degree of the map on the sphere, `b / pi` rounded.
    pub degree: i64,
    /// `z` at every grid node (`z(0) = 0`).
    pub z: Vec<f64>,
    pub z_min: f64,
    pub tol: f64,
}

/// Builds super-harmonic data on `grid` and certifies `z >= -tol` at every
/// node. Blowup additionally needs `b >= pi`; smaller `b >= Phi_a(R)` still
/// give valid sub-solutions. `z` is evaluated with the profile's stationary residual removed
/// analytically: for `theta_0 = Phi_a + beta r`,
/// `z = (m-1) / r^2 (beta r - cos(2 Phi_a + beta r) sin(beta r))`.
pub fn superharmonic_data(
    m: u32,
    a: f64,
    b: f64,
    grid: Arc<RadialGrid>,
    tol: f64,
) -> Result<(FlowState, SuperHarmonicReport), BlowupError> {
    let threshold = theta_threshold(m, 1e-11)?;
    let radius = grid.radius();
    let (profile, beta) = superharmonic_profile(m, a, b, radius)?;
    let end = profile.phi(radius);
    if !(end > FRAC_PI_2 && end < PI) {
        return Err(BlowupError::ProfileOutOfRange { value: end });
    }
    let k = m as f64 - 1.0;
    let r = grid.nodes();
    let mut theta = Vec::with_capacity(r.len());
    let mut z = Vec::with_capacity(r.len());
    for &x in r {
        let phi = profile.phi(x);
        theta.push(phi + beta * x);
        z.push(if x == 0.0 {
            0.0
        } else {
            let br = beta * x;
            // beta r - sin(beta r) carries the sign for small beta r.
            let core = (br - br.sin()) + br.sin() * (1.0 - (2.0 * phi + br).cos());
            k * core / (x * x)
        });
    }
    let z_min = z.iter().copied().fold(f64::INFINITY, f64::min);
    if let Some(i) = z.iter().position(|v| *v < -tol) {
        return Err(BlowupError::InequalityViolated { r: r[i], z: z[i] });
    }
    let state = FlowState::new(0.0, grid, theta, b);
    let report = SuperHarmonicReport { m, a, b, beta, profile_end: end, theta_threshold: threshold, degree: (b / PI).round() as i64, z, z_min, tol };
    Ok((state, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCheck {
    /// Smallest `theta_t` over all monitors (every accepted step).
    pub min_theta_t: f64,
    /// Time at which the minimum occurred.
    pub at: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Minimum of the discrete `theta_t` over every accepted step of the trace.
pub fn monotone_in_time_check(trace: &FlowTrace, tol: f64) -> MonotoneCheck {
    let (min_theta_t, at) = trace
        .monitors
        .iter()
        .map(|m| (m.theta_t_min, m.t))
        .chain(trace.snapshots.iter().map(|s| (s.theta_t.iter().copied().fold(f64::INFINITY, f64::min), s.state.t)))
        .fold((f64::INFINITY, f64::NAN), |acc, v| if v.0 < acc.0 { v } else { acc });
    MonotoneCheck { min_theta_t, at, tol, passed: min_theta_t >= -tol }
}
