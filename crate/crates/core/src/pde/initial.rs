use std::sync::Arc;

use crate::interp::Pchip;
use crate::model::{FlowParams, FlowState, InitialData, ModelError, RadialGrid};
use crate::steady::{shoot_profile, SteadyProfile};

use super::PdeError;

const SHOOT_TOL: f64 = 1e-12;

/// `Phi_a` on `[0, R]` together with `beta = (b - Phi_a(R)) / R`, the slope
/// of the linear correction in `theta_0 = Phi_a + beta r`.
pub fn superharmonic_profile(m: u32, a: f64, b: f64, radius: f64) -> Result<(SteadyProfile, f64), PdeError> {
    let profile = shoot_profile(m, a, radius, SHOOT_TOL)?;
    let beta = (b - profile.phi(radius)) / radius;
    Ok((profile, beta))
}

/// Samples the initial data of `params` on `grid`.
pub fn initial_state(params: &FlowParams, grid: Arc<RadialGrid>) -> Result<FlowState, PdeError> {
    params.validate()?;
    let r = grid.nodes();
    let theta: Vec<f64> = match &params.initial_data {
        InitialData::Linear => r.iter().map(|&x| params.b * x / params.radius).collect(),
        InitialData::Profile { a } => {
            let p = shoot_profile(params.m, *a, params.radius, SHOOT_TOL)?;
            let end = p.phi(params.radius);
            if (end - params.b).abs() > 1e-9 * (1.0 + params.b.abs()) {
                return Err(ModelError::Compatibility(format!(
                    "profile with a = {a} ends at {end}, boundary value is {}",
                    params.b
                ))
                .into());
            }
            r.iter().map(|&x| p.phi(x)).collect()
        }
        InitialData::SuperHarmonic { a } => {
            let (p, beta) = superharmonic_profile(params.m, *a, params.b, params.radius)?;
            if beta < 0.0 {
                return Err(ModelError::Compatibility(format!(
                    "super-harmonic data needs b >= Phi_a(R) = {}, got b = {}",
                    p.phi(params.radius),
                    params.b
                ))
                .into());
            }
            r.iter().map(|&x| p.phi(x) + beta * x).collect()
        }
        InitialData::Tabulated { r: rs, theta } => {
            if rs.len() == 2 {
                r.iter().map(|&x| theta[0] + (theta[1] - theta[0]) * x / rs[1]).collect()
            } else {
                let f = Pchip::new(rs, theta);
                r.iter().map(|&x| f.eval(x)).collect()
            }
        }
    };
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Compatibility("initial data is not finite on the grid".into()).into());
    }
    Ok(FlowState::new(0.0, grid, theta, params.b))
}
