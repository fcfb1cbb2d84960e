use serde::{Deserialize, Serialize};

use crate::interp::Pchip;
use crate::model::FlowState;
use crate::steady::SteadyProfile;

use super::BlowupError;

/// Origin slopes below this are not in the bubble regime.
pub const MIN_BUBBLE_SLOPE: f64 = 10.0;

/// Uniform sample points in the rescaled variable `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleWindow {
    pub y_max: f64,
    pub points: usize,
}

impl Default for BubbleWindow {
    fn default() -> Self {
        Self { y_max: 5.0, points: 501 }
    }
}

/// `sup_y |theta(lambda y) - sign Phi_1(y)|` with `lambda = 1 / theta_r(0)`,
/// over the window points with `lambda y <= R`. `bubble` must be `Phi_1`
/// (slope 1 at the origin) for the dimension of `state`, defined on
/// `[0, y_max]`.
pub fn rescaled_profile_compare(state: &FlowState, bubble: &SteadyProfile, window: BubbleWindow) -> Result<f64, BlowupError> {
    let slope = state.origin_slope();
    if !(slope.abs() >= MIN_BUBBLE_SLOPE) {
        return Err(BlowupError::SlopeTooSmall { slope });
    }
    let lambda = 1.0 / slope.abs();
    let sign = slope.signum();
    let radius = *state.r().last().unwrap();
    let f = Pchip::new(state.r(), &state.theta);
    let mut worst: f64 = 0.0;
    for k in 0..window.points {
        let y = window.y_max * k as f64 / (window.points - 1) as f64;
        let r = lambda * y;
        if r > radius {
            break;
        }
        worst = worst.max((f.eval(r) - sign * bubble.phi(y)).abs());
    }
    Ok(worst)
}
