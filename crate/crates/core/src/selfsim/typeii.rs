use serde::{Deserialize, Serialize};

use crate::model::energy_density;
use crate::pde::FlowTrace;

/// A nondecreasing `a` on `[1, inf)` with `int ds / a(s) = inf`, used through
/// its inverse. Implement this for custom growth functions.
pub trait GrowthFunction {
    /// `a^{-1}(x)`, or `None` when `x < a(1)`.
    fn inverse(&self, x: f64) -> Option<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthPreset {
    /// `a(s) = s`.
    Linear,
    /// `a(s) = s^2`.
    Quadratic,
    /// `a(s) = s log s`.
    LogLinear,
}

impl GrowthFunction for GrowthPreset {
    fn inverse(&self, x: f64) -> Option<f64> {
        match self {
            GrowthPreset::Linear => (x >= 1.0).then_some(x),
            GrowthPreset::Quadratic => (x >= 1.0).then(|| x.sqrt()),
            GrowthPreset::LogLinear => {
                if !(x >= 0.0) {
                    return None;
                }
                // Newton on s log s = x from s = max(1, x / log x).
                let mut s: f64 = if x > std::f64::consts::E { x / x.ln() } else { 1.0 + x };
                for _ in 0..100 {
                    let next = s - (s * s.ln() - x) / (s.ln() + 1.0);
                    let done = (next - s).abs() <= 1e-15 * s;
                    s = next.max(1.0);
                    if done {
                        break;
                    }
                }
                Some(s)
            }
        }
    }
}

/// `b(t) (omega - t) sup_{r <= sqrt(b(t) (omega - t))} e(r, t)` with
/// `b(t) = a^{-1}(|log(omega - t)|)` at every snapshot where `b` is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeIISeries {
    pub omega: f64,
    pub times: Vec<f64>,
    pub b: Vec<f64>,
    pub values: Vec<f64>,
    pub running_max: Vec<f64>,
}

impl TypeIISeries {
    /// Whether `values` never decrease by more than `rel_tol` relative.
    pub fn is_non_decreasing(&self, rel_tol: f64) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] * (1.0 - rel_tol))
    }
}

pub fn refined_typeii_functional(trace: &FlowTrace, omega: f64, a: &dyn GrowthFunction) -> TypeIISeries {
    let mut out = TypeIISeries { omega, times: Vec::new(), b: Vec::new(), values: Vec::new(), running_max: Vec::new() };
    for snap in &trace.snapshots {
        let st = &snap.state;
        let tau = omega - st.t;
        if !(tau > 0.0) {
            continue;
        }
        let Some(b) = a.inverse(tau.ln().abs()) else { continue };
        let rad = (b * tau).sqrt();
        let e = energy_density(st, &trace.params);
        let sup = st.r().iter().zip(&e).filter(|(r, _)| **r <= rad).map(|(_, v)| *v).fold(0.0, f64::max);
        let value = b * tau * sup;
        let prev = out.running_max.last().copied().unwrap_or(0.0);
        out.times.push(st.t);
        out.b.push(b);
        out.values.push(value);
        out.running_max.push(prev.max(value));
    }
    out
}
