use serde::{Deserialize, Serialize};

use crate::interp::Spline;
use crate::pde::FlowTrace;

use super::SelfSimError;

/// Fixed logarithmic grid in `y` shared by all frames: `y = 0` followed by
/// `points` geometric nodes from `y_min` to `y_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameGrid {
    pub y_min: f64,
    pub y_max: f64,
    pub points: usize,
}

/// `y` beyond which `exp(-y^2/4) < 1e-18`.
pub(crate) fn gaussian_cut() -> f64 {
    2.0 * (18.0 * std::f64::consts::LN_10).sqrt()
}

impl Default for FrameGrid {
    fn default() -> Self {
        Self { y_min: 1e-4, y_max: gaussian_cut(), points: 8000 }
    }
}

impl FrameGrid {
    pub fn nodes(&self) -> Vec<f64> {
        let ratio = (self.y_max / self.y_min).ln();
        std::iter::once(0.0)
            .chain((0..self.points).map(|k| self.y_min * (ratio * k as f64 / (self.points - 1) as f64).exp()))
            .collect()
    }
}

/// One snapshot in self-similar coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfSimFrame {
    pub omega: f64,
    pub s: f64,
    /// Grid nodes up to `min(y_max, R e^{s/2})`; the last node is the
    /// truncation point.
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    /// Index of the source snapshot in the trace.
    pub snapshot: usize,
    pub m: u32,
}

impl SelfSimFrame {
    /// `r = e^{-s/2} y`.
    pub fn radius_of(&self, y: f64) -> f64 {
        (-0.5 * self.s).exp() * y
    }

    /// Cubic spline of `w` in `y`.
    pub fn interpolant(&self) -> Spline {
        Spline::new(&self.y, &self.w)
    }

    /// Back to physical variables: `(t, r, theta)`.
    pub fn to_physical(&self) -> (f64, Vec<f64>, Vec<f64>) {
        let t = self.omega - (-self.s).exp();
        let r = self.y.iter().map(|&y| self.radius_of(y)).collect();
        (t, r, self.w.clone())
    }
}

/// Maps every snapshot to `(y, s)` with `t = omega - e^{-s}` and
/// `r = e^{-s/2} y`, interpolating `theta` onto `grid`.
pub fn to_selfsim(trace: &FlowTrace, omega: f64, grid: &FrameGrid) -> Result<Vec<SelfSimFrame>, SelfSimError> {
    let t_max = trace.snapshots.iter().map(|s| s.state.t).fold(f64::NEG_INFINITY, f64::max);
    if !(omega > t_max) {
        return Err(SelfSimError::OmegaInconsistent { omega, t_max });
    }
    let nodes = grid.nodes();
    let frames = trace
        .snapshots
        .iter()
        .enumerate()
        .map(|(k, snap)| {
            let st = &snap.state;
            let s = -(omega - st.t).ln();
            let scale = (0.5 * s).exp();
            let top = (trace.params.radius * scale).min(grid.y_max);
            let mut y: Vec<f64> = nodes.iter().copied().filter(|&v| v < top * (1.0 - 1e-12)).collect();
            y.push(top);
            let f = Spline::new(st.r(), &st.theta);
            let w = y.iter().map(|&v| f.eval((v / scale).min(trace.params.radius))).collect();
            SelfSimFrame { omega, s, y, w, snapshot: k, m: trace.params.m }
        })
        .collect();
    Ok(frames)
}
