use std::f64::consts::{FRAC_PI_2, PI};

use hmflow_core::diagnostics::{
    energy_dissipation_audit, gradient_bound_fit, gradient_bound_fit_eternal, intersection_series,
    origin_slope_series, zero_number, DiagnosticsError, Reference, TailKind, DEFAULT_FLAT_RATE, DEFAULT_ZERO_TOL,
};
use hmflow_core::model::{FlowParams, InitialData, Metric, RadialGrid};
use hmflow_core::pde::{run_flow, FlowTrace, StopRule, TimeStepperConfig};
use hmflow_core::steady::{crossing_count, shoot_with_extrema, PROFILE_ZERO_TOL};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn steady_run() -> FlowTrace {
    run_flow(&FlowParams::flat_linear(3, 1.0, 1.0), &TimeStepperConfig::default(), &StopRule::standard(1.0, 10.0)).unwrap()
}

fn blowup_run(b: f64) -> FlowTrace {
    run_flow(&FlowParams::flat_linear(3, 1.0, b), &TimeStepperConfig::default(), &StopRule::standard(1.0, 10.0)).unwrap()
}

#[test]
fn zero_number_of_profile_matches_crossing_count() {
    let p = shoot_with_extrema(3, 1.0, 6, 1e-11, Default::default()).unwrap();
    let r6 = p.extrema[5].r;
    let mut nodes = vec![0.0];
    let mut h = 1e-4;
    while nodes.last().unwrap() + h < r6 {
        nodes.push(nodes.last().unwrap() + h);
        h *= 1.005;
    }
    if r6 - nodes.last().unwrap() < 0.5 * h {
        nodes.pop();
    }
    nodes.push(r6);
    let grid = RadialGrid::from_nodes(nodes).unwrap();
    let v: Vec<f64> = grid.nodes().iter().map(|&r| p.phi(r) - FRAC_PI_2).collect();
    let z = zero_number(&v, PROFILE_ZERO_TOL).unwrap();
    assert_eq!(z, crossing_count(&p, FRAC_PI_2, (0.0, r6)));
    assert!(z >= 5);
}

proptest! {
    #[test]
    fn zero_number_ignores_positive_scaling(k in 1usize..6, scale in 1e-3f64..1e3) {
        let v: Vec<f64> = (0..=500).map(|i| (k as f64 * PI * i as f64 / 500.0 + 0.3).sin()).collect();
        let w: Vec<f64> = v.iter().map(|x| scale * x).collect();
        prop_assert_eq!(zero_number(&v, DEFAULT_ZERO_TOL), zero_number(&w, DEFAULT_ZERO_TOL));
    }

    #[test]
    fn zero_number_is_stable_under_refinement(k in 1usize..6, n in 200usize..400) {
        let f = |x: f64| (k as f64 * PI * x + 0.3).sin();
        let coarse: Vec<f64> = (0..=n).map(|i| f(i as f64 / n as f64)).collect();
        let fine: Vec<f64> = (0..=4 * n).map(|i| f(i as f64 / (4 * n) as f64)).collect();
        prop_assert_eq!(zero_number(&coarse, DEFAULT_ZERO_TOL), zero_number(&fine, DEFAULT_ZERO_TOL));
    }
}

#[test]
fn intersection_with_itself_is_transparent() {
    let tr = steady_run();
    let z = intersection_series(&tr, Reference::Trace(&tr), DEFAULT_ZERO_TOL);
    assert_eq!(z.times.len(), tr.snapshots.len());
    assert!(z.counts.iter().all(Option::is_none));
    assert!(z.drop_events.is_empty());
}

#[test]
fn intersection_with_half_pi_is_bounded_along_blowup() {
    let tr = blowup_run(3.0);
    let z = intersection_series(&tr, Reference::Constant(FRAC_PI_2), DEFAULT_ZERO_TOL);
    assert!(z.is_non_increasing(), "{:?}", z.counts);
    assert!(z.max_count().unwrap() <= 1);
}

fn random_data(rng: &mut ChaCha8Rng, m: u32, b: f64) -> FlowParams {
    let knots = rng.gen_range(2..6);
    let mut r = vec![0.0];
    let mut theta = vec![0.0];
    for i in 1..=knots {
        r.push(i as f64 / (knots + 1) as f64);
        theta.push(rng.gen_range(-1.0..b + 1.0));
    }
    r.push(1.0);
    theta.push(b);
    FlowParams::new(m, 1.0, b, Metric::Flat, InitialData::Tabulated { r, theta }).unwrap()
}

#[test]
fn intersections_of_random_pairs_do_not_increase() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cfg = TimeStepperConfig::default();
    cfg.grid.base_cells = 256;
    cfg.snapshots.times = (1..=20).map(|i| 0.02 * i as f64).collect();
    let stop = StopRule { t_end: 0.4, m_stop: Some(1e3), steady_tol: None };
    for k in 0..6 {
        let m = [3, 5][k % 2];
        let b = rng.gen_range(0.2..1.5);
        let a = run_flow(&random_data(&mut rng, m, b), &cfg, &stop).unwrap();
        let c = run_flow(&random_data(&mut rng, m, b), &cfg, &stop).unwrap();
        let z = intersection_series(&a, Reference::Trace(&c), DEFAULT_ZERO_TOL);
        assert!(z.times.len() >= 20);
        assert!(z.is_non_increasing(), "pair {k}: {:?}", z.counts);
    }
}

#[test]
fn tangency_produces_a_drop_event() {
    // theta^A - theta^B starts with two nearby sign changes that merge and
    // disappear as the difference diffuses.
    let b = 1.0;
    let base = FlowParams::flat_linear(3, 1.0, b);
    let bumped = FlowParams::new(
        3,
        1.0,
        b,
        Metric::Flat,
        InitialData::Tabulated { r: vec![0.0, 0.3, 0.45, 0.5, 0.55, 0.7, 1.0], theta: vec![0.0, 0.33, 0.43, 0.52, 0.53, 0.73, b] },
    )
    .unwrap();
    let mut cfg = TimeStepperConfig::default();
    cfg.snapshots.times = (1..=100).map(|i| 1e-3 * i as f64).collect();
    let stop = StopRule::until(0.1);
    let a = run_flow(&bumped, &cfg, &stop).unwrap();
    let c = run_flow(&base, &cfg, &stop).unwrap();
    let z = intersection_series(&a, Reference::Trace(&c), DEFAULT_ZERO_TOL);
    assert!(z.counts[0] >= Some(2), "{:?}", z.counts);
    assert!(!z.drop_events.is_empty(), "{:?}", z.counts);
    assert!(z.is_non_increasing());
}

#[test]
fn origin_slope_tails() {
    let s = origin_slope_series(&steady_run(), DEFAULT_FLAT_RATE);
    assert_eq!(s.tail, TailKind::Constant);
    let blow = blowup_run(3.0);
    let s = origin_slope_series(&blow, DEFAULT_FLAT_RATE);
    assert_eq!(s.tail, TailKind::StrictlyIncreasing);
    let flipped = origin_slope_series(&blowup_run(-3.0), DEFAULT_FLAT_RATE);
    assert_eq!(flipped, s.negated());
    assert_eq!(flipped.tail, TailKind::StrictlyDecreasing);
}

#[test]
fn sign_flipped_run_is_the_negated_trace() {
    let a = blowup_run(3.0);
    let b = blowup_run(-3.0);
    let n = a.negated();
    assert_eq!(b.monitors, n.monitors);
    assert_eq!(b.snapshots, n.snapshots);
}

#[test]
fn gradient_bound_on_global_run_is_finite() {
    let tr = steady_run();
    let fit = gradient_bound_fit(&tr, tr.stop.t_end + 1.0);
    assert!(fit.c0.is_finite() && fit.c0 > 0.0);
    // The r^{-1} term dominates: the constant barely moves in time.
    assert!(fit.c_t.iter().all(|c| *c <= fit.c0));
    assert!(gradient_bound_fit_eternal(&tr).is_finite());
}

#[test]
fn energy_audit_of_steady_state_is_trivial() {
    let p = hmflow_core::steady::shoot_profile(3, 1.0, 1.0, 1e-12).unwrap();
    let params = FlowParams::new(3, 1.0, p.phi(1.0), Metric::Flat, InitialData::Profile { a: 1.0 }).unwrap();
    let mut cfg = TimeStepperConfig::default();
    cfg.snapshots.every = Some(0.1);
    let tr = run_flow(&params, &cfg, &StopRule::until(0.5)).unwrap();
    let audit = energy_dissipation_audit(&tr);
    assert!(audit.intervals.len() >= 5);
    assert!(audit.cumulative_dissipation < 1e-8);
    assert!(audit.intervals.iter().all(|i| i.defect < 1e-8));
}

#[test]
fn energy_audit_converges_under_refinement() {
    let params = FlowParams::flat_linear(3, 1.0, 1.0);
    let mut cfg = TimeStepperConfig::default();
    cfg.snapshots.every = Some(0.05);
    let stop = StopRule::standard(1.0, 10.0);
    let coarse = energy_dissipation_audit(&run_flow(&params, &cfg, &stop).unwrap());
    let fine = energy_dissipation_audit(&run_flow(&params, &cfg.refined(), &stop).unwrap());
    assert!(coarse.worst_relative() <= 1e-2);
    // Once the dissipation per interval drops near the rounding level of the
    // energy the defect stops converging; compare the resolved intervals.
    let resolved = |a: &hmflow_core::diagnostics::EnergyAudit| {
        a.intervals.iter().filter(|i| i.dissipation >= 1e-6 * a.initial_energy).map(|i| i.relative).fold(0.0, f64::max)
    };
    assert!(resolved(&fine) <= 0.5 * resolved(&coarse), "{:e} {:e}", resolved(&coarse), resolved(&fine));
    for a in [&coarse, &fine] {
        assert!(a.dissipation_bounded(0.01));
        assert!(a.max_energy_increase <= 1e-10);
    }
}

#[test]
fn all_below_tolerance_is_reported() {
    assert_eq!(zero_number(&[0.0, 0.0], 1e-7), Err(DiagnosticsError::AllBelowTolerance));
}
