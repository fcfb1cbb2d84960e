use super::{metric_factor, CellWeights, FlowParams, FlowState, Metric};
use crate::interp::nodal_derivative;

/// Surface measure of the unit sphere `S^{m-1}` in `R^m`.
pub fn sphere_area(m: u32) -> f64 {
    // 2 pi^{m/2} / Gamma(m/2), Gamma at integers and half-integers.
    let pi = std::f64::consts::PI;
    let gamma_half = |k: u32| -> f64 {
        // Gamma(k/2)
        if k % 2 == 0 {
            (1..k / 2).map(|j| j as f64).product()
        } else {
            let mut g = pi.sqrt();
            let mut x = 0.5;
            while x < k as f64 / 2.0 - 0.25 {
                g *= x;
                x += 1.0;
            }
            g
        }
    };
    2.0 * pi.powf(m as f64 / 2.0) / gamma_half(m)
}

/// Slope at the origin from the odd fit `c1 r + c3 r^3` through the first two
/// interior nodes (`theta(0) = 0`).
pub fn origin_slope(r: &[f64], theta: &[f64]) -> f64 {
    let (r1, r2) = (r[1], r[2]);
    let (t1, t2) = (theta[1], theta[2]);
    (t1 * r2.powi(3) - t2 * r1.powi(3)) / (r1 * r2 * (r2 * r2 - r1 * r1))
}

/// Nodal `theta_r`: centered three-point differences inside, the odd fit at
/// the origin, one-sided second order at `r = R`.
pub fn radial_derivative(r: &[f64], theta: &[f64]) -> Vec<f64> {
    let mut d = nodal_derivative(r, theta);
    d[0] = origin_slope(r, theta);
    d
}

/// `e(r) = theta_r^2 + (m-1) sin^2(theta) / r^2`, with the limit
/// `m theta_r(0)^2` at the origin.
pub fn energy_density(state: &FlowState, params: &FlowParams) -> Vec<f64> {
    let mf = params.m as f64;
    let r = state.r();
    state
        .theta
        .iter()
        .zip(&state.theta_r)
        .zip(r)
        .map(|((th, thr), &ri)| {
            if ri == 0.0 {
                mf * thr * thr
            } else {
                let s = th.sin() / ri;
                thr * thr + (mf - 1.0) * s * s
            }
        })
        .collect()
}

fn weighted_energy(state: &FlowState, m: u32, weight: impl Fn(f64) -> f64) -> f64 {
    let r = state.r();
    let w = CellWeights::new(&state.grid, m);
    let th = &state.theta;
    let mut grad = 0.0;
    for i in 0..r.len() - 1 {
        let h = r[i + 1] - r[i];
        let d = th[i + 1] - th[i];
        grad += weight(0.5 * (r[i] + r[i + 1])) * w.face[i] * d * d / h;
    }
    let mut pot = 0.0;
    for i in 1..r.len() {
        let s = th[i].sin();
        pot += weight(r[i]) * w.zero_order[i] * s * s;
    }
    0.5 * sphere_area(m) * (grad + pot)
}

/// Dirichlet energy `E = 1/2 |S^{m-1}| int e(r) w(r) r^{m-1} dr`.
///
/// The gradient term uses cellwise exact `r^{m-1}` weights on the piecewise
/// linear interpolant; the angular term uses the dual-cell weights of
/// [`CellWeights`]. On the sphere the conformal weights combine to
/// `w = g^{(m-2)/2}`.
pub fn dirichlet_energy(state: &FlowState, params: &FlowParams) -> f64 {
    let m = params.m;
    match params.metric {
        Metric::Flat => weighted_energy(state, m, |_| 1.0),
        Metric::SphereStereographic => {
            let p = (m as f64 - 2.0) / 2.0;
            weighted_energy(state, m, |r| metric_factor(r, params.metric).powf(-p))
        }
    }
}

/// The functional dissipated by the radial flow for either metric: the flat
/// Dirichlet energy. The sphere-domain flow multiplies the flat tension by
/// `g^{-1}`, so it is the gradient flow of this energy in the `g`-weighted
/// inner product. Coincides with [`dirichlet_energy`] when the metric is flat
/// or `m = 2`.
pub fn flow_energy(state: &FlowState, m: u32) -> f64 {
    weighted_energy(state, m, |_| 1.0)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{InitialData, RadialGrid};

    #[test]
    fn sphere_areas() {
        let pi = std::f64::consts::PI;
        assert!((sphere_area(2) - 2.0 * pi).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * pi).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * pi * pi).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * pi * pi / 3.0).abs() < 1e-12);
    }

    fn state_from(f: impl Fn(f64) -> f64, radius: f64, cells: usize) -> FlowState {
        let g = Arc::new(RadialGrid::uniform(radius, cells).unwrap());
        let th: Vec<f64> = g.nodes().iter().map(|&r| f(r)).collect();
        let b = *th.last().unwrap();
        FlowState::new(0.0, g, th, b)
    }

    #[test]
    fn zero_map_has_zero_energy() {
        let s = state_from(|_| 0.0, 1.0, 64);
        for m in 2..6 {
            let p = FlowParams::flat_linear(m, 1.0, 0.0);
            assert!(energy_density(&s, &p).iter().all(|&e| e == 0.0));
            assert_eq!(dirichlet_energy(&s, &p), 0.0);
        }
    }

    #[test]
    fn bubble_energy_density() {
        let s = state_from(|r: f64| 2.0 * r.atan(), 4.0, 4000);
        let p = FlowParams::flat_linear(2, 4.0, 2.0 * 4f64.atan());
        let e = energy_density(&s, &p);
        for (i, &r) in s.r().iter().enumerate() {
            let exact = 8.0 / (1.0 + r * r).powi(2);
            assert!((e[i] - exact).abs() < 1e-5, "r={r} e={} exact={exact}", e[i]);
        }
    }

    #[test]
    fn origin_limit_uses_m_times_slope_squared() {
        let s = state_from(|r: f64| 0.7 * r - 0.1 * r.powi(3), 1.0, 200);
        let p = FlowParams::flat_linear(3, 1.0, 0.6);
        let e = energy_density(&s, &p);
        assert!((s.theta_r[0] - 0.7).abs() < 1e-12);
        assert!((e[0] - 3.0 * 0.49).abs() < 1e-11);
        assert!(e.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn sphere_energy_for_m2_matches_flat() {
        let s = state_from(|r: f64| 2.0 * r.atan(), 1.0, 100);
        let mut p = FlowParams::flat_linear(2, 1.0, s.boundary_value());
        let flat = dirichlet_energy(&s, &p);
        p.metric = Metric::SphereStereographic;
        p.initial_data = InitialData::Linear;
        assert!((dirichlet_energy(&s, &p) - flat).abs() < 1e-14);
        assert!((flow_energy(&s, 2) - flat).abs() < 1e-14);
    }
}
