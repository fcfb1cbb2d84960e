use serde::{Deserialize, Serialize};

use crate::pde::FlowTrace;

/// Fit of `|theta_r| <= C (r^{-1} + (omega - t)^{-1/2})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoundFit {
    pub omega: f64,
    /// Sup of `c_t` over all snapshots.
    pub c0: f64,
    pub times: Vec<f64>,
    /// Smallest constant that works at each snapshot.
    pub c_t: Vec<f64>,
}

impl GradientBoundFit {
    /// `max c_t / min c_t` over snapshots with `omega - t` within `decades`
    /// decades of the last snapshot's distance to `omega`.
    pub fn variation(&self, decades: f64) -> f64 {
        let Some(&t_last) = self.times.last() else { return f64::NAN };
        let near = self.omega - t_last;
        let far = near * 10f64.powf(decades);
        let vals: Vec<f64> =
            self.times.iter().zip(&self.c_t).filter(|(t, _)| self.omega - **t <= far).map(|(_, c)| *c).collect();
        let hi = vals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lo = vals.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        hi / lo
    }
}

fn sup_ratio(trace: &FlowTrace, bound: impl Fn(f64, f64) -> Option<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut times = Vec::new();
    let mut c_t = Vec::new();
    for s in &trace.snapshots {
        let st = &s.state;
        let c = st
            .r()
            .iter()
            .zip(&st.theta_r)
            .filter_map(|(&r, d)| bound(r, st.t).map(|b| d.abs() / b))
            .fold(0.0, f64::max);
        times.push(st.t);
        c_t.push(c);
    }
    (times, c_t)
}

/// Local gradient bound near a blowup at time `omega`. Snapshots at or after
/// `omega` are skipped; the origin node is excluded.
pub fn gradient_bound_fit(trace: &FlowTrace, omega: f64) -> GradientBoundFit {
    let (times, c_t) = sup_ratio(trace, |r, t| (r > 0.0 && t < omega).then(|| 1.0 / r + (omega - t).powf(-0.5)));
    let keep: Vec<usize> = (0..times.len()).filter(|&i| times[i] < omega).collect();
    let times: Vec<f64> = keep.iter().map(|&i| times[i]).collect();
    let c_t: Vec<f64> = keep.iter().map(|&i| c_t[i]).collect();
    let c0 = c_t.iter().fold(0.0, |a: f64, &b| a.max(b));
    GradientBoundFit { omega, c0, times, c_t }
}

/// Global-in-time bound `|theta_r| <= C (1 + r^{-1} + (R - r)^{-1})` for
/// solutions that exist for all time; both end nodes are excluded.
pub fn gradient_bound_fit_eternal(trace: &FlowTrace) -> f64 {
    let radius = trace.params.radius;
    let (_, c_t) = sup_ratio(trace, |r, _| (r > 0.0 && r < radius).then(|| 1.0 + 1.0 / r + 1.0 / (radius - r)));
    c_t.into_iter().fold(0.0, f64::max)
}
