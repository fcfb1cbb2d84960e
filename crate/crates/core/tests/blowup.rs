use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use hmflow_core::blowup::{
    classify_rate, estimate_blowup_time, estimate_from_trace, monotone_in_time_check, rescaled_profile_compare,
    superharmonic_data, BlowupError, BlowupFit, BubbleWindow, Classification, RateOptions,
};
use hmflow_core::model::{FlowParams, FlowState, InitialData, Metric, RadialGrid};
use hmflow_core::pde::{run_flow, FlowTrace, Monitor, StopReason, StopRule, TimeStepperConfig};
use hmflow_core::steady::{shoot_profile, SteadyError};

fn taus() -> Vec<f64> {
    (0..400).map(|k| 10f64.powf(-8.0 * k as f64 / 399.0)).filter(|t| *t < 1.0).collect()
}

#[test]
fn square_root_law_recovers_omega() {
    let tau = taus();
    let t: Vec<f64> = tau.iter().map(|x| 1.0 - x).collect();
    let m: Vec<f64> = tau.iter().map(|x| x.powf(-0.5)).collect();
    let fit = estimate_blowup_time(&t, &m).unwrap();
    assert!((fit.omega - 1.0).abs() <= 1e-6);
    assert!(fit.residual < 1e-6);
    assert!(!fit.flagged());
}

#[test]
fn logarithmic_correction_is_flagged() {
    let tau = taus();
    let t: Vec<f64> = tau.iter().map(|x| 1.0 - x).collect();
    let m: Vec<f64> = tau.iter().map(|x| x.powf(-0.5) * x.ln().abs()).collect();
    let fit = estimate_blowup_time(&t, &m).unwrap();
    assert!(fit.flagged(), "{fit:?}");
    let exact = estimate_blowup_time(&t, &tau.iter().map(|x| x.powf(-0.5)).collect::<Vec<_>>()).unwrap();
    assert!((fit.omega - 1.0).abs() > 100.0 * (exact.omega - 1.0).abs());
}

/// A short run whose monitors are replaced by `(t, m, sup e)` samples.
fn synthetic(samples: &[(f64, f64, f64)]) -> FlowTrace {
    let mut cfg = TimeStepperConfig::default();
    cfg.grid.base_cells = 32;
    let mut tr = run_flow(&FlowParams::flat_linear(3, 1.0, 1.0), &cfg, &StopRule::until(1e-6)).unwrap();
    let template = tr.initial;
    tr.monitors = samples
        .iter()
        .map(|&(t, gradient, sup_energy_density)| Monitor { t, gradient, sup_energy_density, ..template })
        .collect();
    tr
}

fn fit_at(omega: f64) -> Result<BlowupFit, BlowupError> {
    Ok(BlowupFit { omega, residual: 0.0, points: 0, window: (0.0, omega) })
}

fn rate_family(scale: f64, q: impl Fn(f64) -> f64) -> Vec<(f64, f64, f64)> {
    taus().into_iter().map(|tau| (scale * (1.0 - tau), 1.0 / (scale * tau).sqrt(), q(tau) / (scale * tau))).collect()
}

#[test]
fn log_squared_growth_is_type_two() {
    let tr = synthetic(&rate_family(1.0, |tau| tau.ln().powi(2)));
    let rep = classify_rate(&tr, fit_at(1.0), None, RateOptions::default());
    assert_eq!(rep.classification, Classification::TypeII, "{rep:?}");
    assert!(rep.q_monotone);
    assert!((rep.log_power - 2.0).abs() < 0.05);
    assert!(rep.q_series.iter().all(|(_, q)| *q >= 0.0));
}

#[test]
fn plateau_is_type_one() {
    let tr = synthetic(&rate_family(1.0, |tau| 20.0 + tau.sqrt()));
    let rep = classify_rate(&tr, fit_at(1.0), None, RateOptions::default());
    assert_eq!(rep.classification, Classification::TypeI);
    assert!(rep.q_ratio < 1.01);
}

#[test]
fn classification_ignores_the_time_unit() {
    for q in [(|tau: f64| tau.ln().powi(2)) as fn(f64) -> f64, |tau: f64| 3.0 - tau.powf(0.2)] {
        let base = classify_rate(&synthetic(&rate_family(1.0, q)), fit_at(1.0), None, RateOptions::default());
        for c in [1e-3, 7.0] {
            let scaled = classify_rate(&synthetic(&rate_family(c, q)), fit_at(c), None, RateOptions::default());
            assert_eq!(scaled.classification, base.classification);
        }
    }
}

#[test]
fn unresolved_fit_means_no_blowup() {
    let tr = synthetic(&[(0.0, 1.0, 1.0), (0.5, 2.0, 4.0)]);
    let fit = estimate_from_trace(&tr);
    assert!(matches!(fit, Err(BlowupError::InsufficientGrowth { .. })));
    assert_eq!(classify_rate(&tr, fit.clone(), None, RateOptions::default()).classification, Classification::NoBlowup);
    let stopped = FlowTrace { stop_reason: StopReason::GradientThreshold, ..tr };
    assert_eq!(classify_rate(&stopped, fit, None, RateOptions::default()).classification, Classification::Undetermined);
}

#[test]
fn type_one_run_in_three_dimensions() {
    let stop = StopRule { t_end: 10.0, m_stop: Some(1e4), steady_tol: None };
    let tr = run_flow(&FlowParams::flat_linear(3, 1.0, 3.0), &TimeStepperConfig::default(), &stop).unwrap();
    let fit = estimate_from_trace(&tr).unwrap();
    assert!(fit.omega > tr.final_time());
    assert!(!fit.flagged());
    let bubble = shoot_profile(3, 1.0, 5.0, 1e-12).unwrap();
    let rep = classify_rate(&tr, Ok(fit), Some(&bubble), RateOptions::default());
    assert_eq!(rep.classification, Classification::TypeI);
    assert!(rep.q_ratio < 10.0);
    assert!(rep.q_series.iter().all(|(_, q)| *q >= 0.0));
    assert!(rep.bubble_error.is_some());
}

fn profile_state(m: u32, c: f64, sign: f64) -> FlowState {
    let p = shoot_profile(m, c, 1.0, 1e-12).unwrap();
    let grid = Arc::new(RadialGrid::uniform(1.0, 8192).unwrap());
    let theta: Vec<f64> = grid.nodes().iter().map(|&r| sign * p.phi(r)).collect();
    FlowState::new(0.0, grid, theta, sign * p.phi(1.0))
}

#[test]
fn scaled_profiles_match_the_bubble() {
    for m in [3, 4] {
        let bubble = shoot_profile(m, 1.0, 5.0, 1e-12).unwrap();
        for c in [12.0, 40.0] {
            let err = rescaled_profile_compare(&profile_state(m, c, 1.0), &bubble, BubbleWindow::default()).unwrap();
            assert!(err < 1e-3, "m = {m}, c = {c}: {err}");
            let flipped = rescaled_profile_compare(&profile_state(m, c, -1.0), &bubble, BubbleWindow::default()).unwrap();
            assert_eq!(err, flipped);
        }
    }
}

#[test]
fn shallow_states_are_not_compared() {
    let bubble = shoot_profile(3, 1.0, 5.0, 1e-12).unwrap();
    let r = rescaled_profile_compare(&profile_state(3, 5.0, 1.0), &bubble, BubbleWindow::default());
    assert!(matches!(r, Err(BlowupError::SlopeTooSmall { .. })));
}

fn grid(cells: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::uniform(1.0, cells).unwrap())
}

#[test]
fn superharmonic_data_satisfy_the_inequality() {
    let (state, rep) = superharmonic_data(3, 5.0, PI, grid(1024), 1e-8).unwrap();
    assert!(rep.profile_end > FRAC_PI_2 && rep.profile_end < PI);
    assert!(rep.z_min >= -1e-8);
    assert_eq!(rep.degree, 1);
    assert_eq!(state.theta[0], 0.0);
    assert_eq!(*state.theta.last().unwrap(), PI);
    // Second differences of the sampled data agree with the reported z.
    let r = state.r();
    let h = r[1] - r[0];
    for i in (100..1000).step_by(50) {
        let th = &state.theta;
        let d2 = (th[i + 1] - 2.0 * th[i] + th[i - 1]) / (h * h);
        let d1 = (th[i + 1] - th[i - 1]) / (2.0 * h);
        let z = d2 + 2.0 * d1 / r[i] - (2.0 * th[i]).sin() / (r[i] * r[i]);
        assert!((z - rep.z[i]).abs() < 1e-3 * (1.0 + rep.z[i].abs()), "r = {}: {z} vs {}", r[i], rep.z[i]);
    }
}

#[test]
fn zero_slope_correction_is_the_steady_profile() {
    let p = shoot_profile(3, 5.0, 1.0, 1e-12).unwrap();
    let (state, rep) = superharmonic_data(3, 5.0, p.phi(1.0), grid(256), 1e-8).unwrap();
    assert_eq!(rep.beta, 0.0);
    assert!(rep.z.iter().all(|z| *z == 0.0));
    for (r, th) in state.r().iter().zip(&state.theta).take(256) {
        assert_eq!(*th, p.phi(*r));
    }
}

#[test]
fn superharmonic_guards() {
    assert!(matches!(
        superharmonic_data(7, 5.0, PI, grid(64), 1e-8),
        Err(BlowupError::Steady(SteadyError::UnsupportedDimension(7)))
    ));
    assert!(matches!(superharmonic_data(3, 0.5, PI, grid(64), 1e-8), Err(BlowupError::ProfileOutOfRange { .. })));
    let p = shoot_profile(3, 5.0, 1.0, 1e-12).unwrap();
    assert!(matches!(
        superharmonic_data(3, 5.0, p.phi(1.0) - 0.2, grid(64), 1e-8),
        Err(BlowupError::InequalityViolated { .. })
    ));
}

#[test]
fn monotonicity_in_time() {
    let params = FlowParams::new(3, 1.0, PI, Metric::SphereStereographic, InitialData::SuperHarmonic { a: 5.0 }).unwrap();
    let mut cfg = TimeStepperConfig::default();
    cfg.scheme = hmflow_core::pde::Scheme::Imex1;
    let tr = run_flow(&params, &cfg, &StopRule::until(0.02)).unwrap();
    let check = monotone_in_time_check(&tr, 1e-8);
    assert!(check.passed, "{check:?}");

    let p = shoot_profile(3, 1.0, 1.0, 1e-12).unwrap();
    let steady = FlowParams::new(3, 1.0, p.phi(1.0), Metric::Flat, InitialData::Profile { a: 1.0 }).unwrap();
    // A steady profile has theta_t equal to the discretization residual.
    let residual = |cells: usize| {
        let mut cfg = TimeStepperConfig::default();
        cfg.grid.base_cells = cells;
        let tr = run_flow(&steady, &cfg, &StopRule::until(0.2)).unwrap();
        monotone_in_time_check(&tr, 1e-8).min_theta_t.abs()
    };
    let (coarse, fine) = (residual(512), residual(2048));
    assert!(coarse < 1e-3 && fine < coarse / 8.0, "{coarse:e} {fine:e}");

    // Out of hypothesis: the value is reported, nothing is claimed.
    let tr = run_flow(&FlowParams::flat_linear(3, 1.0, 1.2), &TimeStepperConfig::default(), &StopRule::until(0.2)).unwrap();
    assert!(monotone_in_time_check(&tr, 1e-8).min_theta_t.is_finite());
}
