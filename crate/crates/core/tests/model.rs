use std::f64::consts::PI;
use std::sync::Arc;

use hmflow_core::model::{
    dirichlet_energy, energy_density, flow_energy, metric_factor, sphere_area, FlowParams, FlowState, InitialData,
    Metric, RadialGrid,
};
use hmflow_core::steady::shoot_profile;
use proptest::prelude::*;

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

fn state(cells: usize, radius: f64, b: f64, f: impl Fn(f64) -> f64) -> FlowState {
    let grid = Arc::new(RadialGrid::uniform(radius, cells).unwrap());
    let theta = grid.nodes().iter().map(|&r| f(r)).collect();
    FlowState::new(0.0, grid, theta, b)
}

/// `1/2 |S^{m-1}| int (theta_r^2 + (m-1) sin^2 theta / r^2) w(r) r^{m-1} dr`.
fn energy_oracle(m: u32, radius: f64, theta: &dyn Fn(f64) -> f64, theta_r: &dyn Fn(f64) -> f64, w: &dyn Fn(f64) -> f64) -> f64 {
    let mf = m as f64;
    let integrand = |r: f64| {
        if r == 0.0 {
            return if m == 2 { mf * theta_r(0.0).powi(2) * w(0.0) } else { 0.0 };
        }
        let s = theta(r).sin() / r;
        (theta_r(r).powi(2) + (mf - 1.0) * s * s) * w(r) * r.powi(m as i32 - 1)
    };
    0.5 * sphere_area(m) * simpson(&integrand, 0.0, radius, 1e-14)
}

#[test]
fn zero_map_has_no_energy() {
    for m in 2..6 {
        let params = FlowParams::new(m, 1.0, 0.0, Metric::Flat, InitialData::Linear).unwrap();
        let s = state(64, 1.0, 0.0, |_| 0.0);
        assert!(energy_density(&s, &params).iter().all(|e| *e == 0.0));
        assert_eq!(dirichlet_energy(&s, &params), 0.0);
    }
}

#[test]
fn bubble_energy_density() {
    let params = FlowParams::new(2, 4.0, 2.0 * 4f64.atan(), Metric::Flat, InitialData::Linear).unwrap();
    let s = state(8192, 4.0, params.b, |r| 2.0 * r.atan());
    let e = energy_density(&s, &params);
    for (r, e) in s.r().iter().zip(&e) {
        let exact = 8.0 / (1.0 + r * r).powi(2);
        assert!((e - exact).abs() < 1e-6, "r={r}");
    }
}

#[test]
fn profile_energy_density_matches_reshooting() {
    let p = shoot_profile(3, 1.0, 1.0, 1e-12).unwrap();
    let b = p.phi(1.0);
    let params = FlowParams::new(3, 1.0, b, Metric::Flat, InitialData::Profile { a: 1.0 }).unwrap();
    let s = state(8192, 1.0, b, |r| p.phi(r));
    let e = energy_density(&s, &params);
    let dense = shoot_profile(3, 1.0, 1.0, 1e-13).unwrap();
    for (r, e) in s.r().iter().zip(&e).skip(1) {
        let exact = dense.dphi(*r).powi(2) + 2.0 * (dense.phi(*r).sin() / r).powi(2);
        assert!((e - exact).abs() < 1e-6, "r={r}");
    }
    assert!((e[0] - 3.0).abs() < 1e-6);
}

#[test]
fn linear_data_energy_against_quadrature() {
    for b in [0.1, 0.5] {
        let params = FlowParams::flat_linear(3, 1.0, b);
        let theta = |r: f64| b * r;
        let exact = energy_oracle(3, 1.0, &theta, &|_| b, &|_| 1.0);
        let coarse = dirichlet_energy(&state(2048, 1.0, b, theta), &params);
        let fine = dirichlet_energy(&state(16384, 1.0, b, theta), &params);
        let err_c = (coarse - exact).abs() / exact;
        let err_f = (fine - exact).abs() / exact;
        assert!(err_f <= 1e-8, "b={b}: {err_f:e}");
        // Second order: eight times finer, about 64 times smaller.
        assert!(err_f < err_c / 30.0, "b={b}: {err_c:e} {err_f:e}");
    }
}

#[test]
fn sphere_energy_uses_conformal_weight() {
    let b = 1.2;
    let theta = |r: f64| b * r * r;
    let theta_r = |r: f64| 2.0 * b * r;
    for m in [2, 3, 4] {
        let params = FlowParams::new(m, 1.0, b, Metric::SphereStereographic, InitialData::Linear).unwrap();
        let s = state(4096, 1.0, b, theta);
        let p = (m as f64 - 2.0) / 2.0;
        let exact = energy_oracle(m, 1.0, &theta, &theta_r, &|r| metric_factor(r, Metric::SphereStereographic).powf(-p));
        let got = dirichlet_energy(&s, &params);
        assert!((got - exact).abs() <= 1e-6 * exact, "m={m}");
        if m == 2 {
            assert_eq!(got, flow_energy(&s, m));
        } else {
            assert!(got < flow_energy(&s, m));
        }
    }
}

#[test]
fn metric_factor_examples() {
    assert_eq!(metric_factor(0.5, Metric::Flat), 1.0);
    assert_eq!(metric_factor(0.0, Metric::SphereStereographic), 1.0);
    assert_eq!(metric_factor(1.0, Metric::SphereStereographic), 4.0);
    for i in 0..=100 {
        let r = 0.01 * i as f64;
        let g = 1.0 / metric_factor(r, Metric::SphereStereographic);
        assert!((0.25..=1.0).contains(&g));
    }
}

#[test]
fn sphere_areas() {
    assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
    assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
}

proptest! {
    #[test]
    fn energy_density_is_non_negative(values in prop::collection::vec(-10.0f64..10.0, 9), m in 2u32..8) {
        let b = values[8];
        let grid = Arc::new(RadialGrid::uniform(1.0, 8).unwrap());
        let s = FlowState::new(0.0, grid, values.clone(), b);
        let params = FlowParams::new(m, 1.0, b, Metric::Flat, InitialData::Linear).unwrap();
        prop_assert!(energy_density(&s, &params).iter().all(|e| *e >= 0.0));
        prop_assert!(dirichlet_energy(&s, &params) >= 0.0);
    }

    #[test]
    fn metric_factor_is_at_least_one(r in 0.0f64..100.0) {
        prop_assert!(metric_factor(r, Metric::SphereStereographic) >= 1.0);
        prop_assert_eq!(metric_factor(r, Metric::Flat), 1.0);
    }
}
