use crate::model::{energy_density, sphere_area, FlowState};
use crate::pde::FlowTrace;

use super::SelfSimError;

/// `|S^{m-1}| int_0^rad e(r) r^{m-1} dr` by the trapezoid rule on the nodes,
/// closing the last partial cell by linear interpolation.
fn ball_energy(state: &FlowState, e: &[f64], m: u32, rad: f64) -> f64 {
    let r = state.r();
    let p = m as i32 - 1;
    let g = |i: usize| e[i] * r[i].powi(p);
    let mut total = 0.0;
    for i in 0..r.len() - 1 {
        if r[i] >= rad {
            break;
        }
        if r[i + 1] <= rad {
            total += 0.5 * (g(i) + g(i + 1)) * (r[i + 1] - r[i]);
        } else {
            let t = (rad - r[i]) / (r[i + 1] - r[i]);
            let end = (e[i] + t * (e[i + 1] - e[i])) * rad.powi(p);
            total += 0.5 * (g(i) + end) * (rad - r[i]);
        }
    }
    sphere_area(m) * total
}

/// `rad^{-m} int_{omega - rad^2}^{omega - rad^2/e} int_{B_rad} e dV dt`, the
/// time integral by the trapezoid rule over the snapshots inside the window
/// and linear interpolation at its ends.
pub fn cylinder_energy(trace: &FlowTrace, omega: f64, rad: f64) -> Result<f64, SelfSimError> {
    let lo = omega - rad * rad;
    let hi = omega - rad * rad / std::f64::consts::E;
    let times = trace.snapshot_times();
    let (first, last) = (times[0], *times.last().unwrap());
    if !(first <= lo && last >= hi) {
        return Err(SelfSimError::WindowUncovered { lo, hi });
    }
    let m = trace.params.m;
    let values: Vec<f64> = trace
        .snapshots
        .iter()
        .map(|s| ball_energy(&s.state, &energy_density(&s.state, &trace.params), m, rad))
        .collect();
    let at = |t: f64| {
        let i = crate::interp::locate(&times, t);
        let f = (t - times[i]) / (times[i + 1] - times[i]);
        values[i] + f * (values[i + 1] - values[i])
    };
    let mut pts = vec![(lo, at(lo))];
    pts.extend(times.iter().zip(&values).filter(|(t, _)| **t > lo && **t < hi).map(|(t, v)| (*t, *v)));
    pts.push((hi, at(hi)));
    let integral: f64 = pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
    Ok(integral / rad.powi(m as i32))
}
