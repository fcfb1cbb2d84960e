use std::sync::Arc;

use crate::interp::Pchip;
use crate::model::{dirichlet_energy, energy_density, flow_energy, FlowParams, FlowState, GridError};

use super::{
    initial_state, uniform_grid, FlowTrace, GridPolicy, Monitor, Operator, PdeError, Scheme, Snapshot, StopReason,
    StopRule, TimeStepperConfig,
};

const GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

/// Result of one accepted time step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: FlowState,
    /// Increment quotient `(theta^{n+1} - theta^n) / dt`.
    pub theta_t: Vec<f64>,
    /// Sup-norm difference between the second and first order solutions.
    pub error: f64,
    /// `int_{t_n}^{t_{n+1}} int g theta_t^2 dV` from the increment quotient.
    pub dissipation: f64,
}

type Forcing<'a> = Option<&'a dyn Fn(f64, f64) -> f64>;

/// First and second order solutions after one step from `theta`.
fn advance(op: &Operator, r: &[f64], theta: &[f64], t: f64, dt: f64, forcing: Forcing) -> Result<(Vec<f64>, Vec<f64>), PdeError> {
    let n = theta.len();
    let explicit = |u: &[f64], time: f64| {
        let mut k = op.explicit(u);
        if let Some(f) = forcing {
            for i in 1..n - 1 {
                k[i] += f(r[i], time);
            }
        }
        k
    };
    let k1 = explicit(theta, t);
    // Euler in increment form: (I - dt GA) d = dt (GA theta + k1) with zero
    // boundary data, so a non-negative right-hand side gives d >= 0 exactly.
    let l1 = op.linear(theta);
    let rhs: Vec<f64> = (0..n).map(|i| dt * (l1[i] + k1[i])).collect();
    let d = op.solve_homogeneous(dt, &rhs)?;
    let euler: Vec<f64> = theta.iter().zip(&d).map(|(u, di)| u + di).collect();

    let gdt = GAMMA * dt;
    let delta = 1.0 - 1.0 / (2.0 * GAMMA);
    let rhs: Vec<f64> = theta.iter().zip(&k1).map(|(u, k)| u + gdt * k).collect();
    let u2 = op.solve(gdt, &rhs)?;
    let k2 = explicit(&u2, t + gdt);
    let l2 = op.linear(&u2);
    let rhs: Vec<f64> = (0..n)
        .map(|i| theta[i] + dt * ((1.0 - GAMMA) * l2[i] + delta * k1[i] + (1.0 - delta) * k2[i]))
        .collect();
    let ars = op.solve(gdt, &rhs)?;
    Ok((euler, ars))
}

fn try_step(
    op: &Operator,
    state: &FlowState,
    dt: f64,
    t_new: f64,
    params: &FlowParams,
    scheme: Scheme,
    forcing: Forcing,
) -> Result<StepOutcome, PdeError> {
    let r = state.r();
    let (euler, ars) = advance(op, r, &state.theta, state.t, dt, forcing)?;
    let error = euler.iter().zip(&ars).fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
    let theta = match scheme {
        Scheme::Imex1 => euler,
        Scheme::Imex2 => ars,
    };
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(PdeError::NonFinite(t_new));
    }
    let actual_dt = t_new - state.t;
    let theta_t: Vec<f64> = theta.iter().zip(&state.theta).map(|(a, b)| (a - b) / actual_dt).collect();
    let dissipation = op
        .dissipation_weight
        .iter()
        .zip(&theta_t)
        .map(|(w, v)| w * v * v)
        .sum::<f64>()
        * actual_dt;
    let new_state = FlowState::new(t_new, state.grid.clone(), theta, params.b);
    Ok(StepOutcome { state: new_state, theta_t, error, dissipation })
}

/// One IMEX step of size `dt`. Fails with [`PdeError::StepRejected`] when the
/// embedded error estimate exceeds `config.tol`.
pub fn step(state: &FlowState, dt: f64, params: &FlowParams, config: &TimeStepperConfig) -> Result<StepOutcome, PdeError> {
    step_impl(state, dt, params, config, None)
}

/// [`step`] for `theta_t = (flow) + f(r, t)`, used with manufactured
/// solutions.
pub fn step_forced(
    state: &FlowState,
    dt: f64,
    params: &FlowParams,
    config: &TimeStepperConfig,
    forcing: &dyn Fn(f64, f64) -> f64,
) -> Result<StepOutcome, PdeError> {
    step_impl(state, dt, params, config, Some(forcing))
}

fn step_impl(state: &FlowState, dt: f64, params: &FlowParams, config: &TimeStepperConfig, forcing: Forcing) -> Result<StepOutcome, PdeError> {
    let op = Operator::new(&state.grid, params);
    let out = try_step(&op, state, dt, state.t + dt, params, config.scheme, forcing)?;
    if out.error > config.tol {
        return Err(PdeError::StepRejected { error: out.error, tol: config.tol });
    }
    Ok(out)
}

/// Whether fewer than `p_min` grid points resolve the gradient scale
/// `1/m(t)` near the origin.
pub fn needs_refinement(state: &FlowState, policy: &GridPolicy) -> bool {
    state.gradient_sup() * state.grid.h_min() * policy.p_min > 1.0
}

/// Adds one dyadic level toward the origin when [`needs_refinement`] holds;
/// otherwise returns the state unchanged. New nodes are filled by monotone
/// cubic interpolation; old nodes keep their values.
pub fn regrid(state: &FlowState, policy: &GridPolicy) -> Result<FlowState, PdeError> {
    if !needs_refinement(state, policy) {
        return Ok(state.clone());
    }
    refine_once(state, policy)
}

/// Refinement used inside [`run_flow`]. When the current state is a discrete
/// sub-solution (`theta_t >= 0` at every node) the interpolant is lowered to
/// the largest sub-solution below it on the new grid, so monotone growth in
/// time survives the change of grid. Super-solutions are treated by the
/// mirror image, which keeps the solver odd under `theta -> -theta`.
fn refine_in_run(state: &FlowState, policy: &GridPolicy, params: &FlowParams) -> Result<FlowState, PdeError> {
    let residual = Operator::new(&state.grid, params).rhs(&state.theta);
    let sign = if residual.iter().all(|v| *v >= 0.0) {
        1.0
    } else if residual.iter().all(|v| *v <= 0.0) {
        -1.0
    } else {
        0.0
    };
    let fine = refine_once(state, policy)?;
    if sign == 0.0 {
        return Ok(fine);
    }
    let op = Operator::new(&fine.grid, params);
    let mut theta: Vec<f64> = fine.theta.iter().map(|v| sign * v).collect();
    op.project_subsolution(&mut theta, 100_000);
    theta.iter_mut().for_each(|v| *v *= sign);
    Ok(FlowState::new(fine.t, fine.grid.clone(), theta, fine.boundary_value()))
}

fn refine_once(state: &FlowState, policy: &GridPolicy) -> Result<FlowState, PdeError> {
    let (grid, inserted) = state.grid.refine(policy.cells_per_level, policy.max_depth).map_err(|e| match e {
        GridError::MaxDepthExceeded(d) => PdeError::ResolutionExhausted { t: state.t, gradient: state.gradient_sup(), max_depth: d },
        other => PdeError::Grid(other),
    })?;
    let interp = Pchip::new(state.r(), &state.theta);
    let mut old = state.theta.iter();
    let theta: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&inserted)
        .map(|(&r, &new)| if new { interp.eval(r) } else { *old.next().unwrap() })
        .collect();
    Ok(FlowState::new(state.t, Arc::new(grid), theta, state.boundary_value()))
}

fn monitor(state: &FlowState, params: &FlowParams, dt: f64, theta_t: &[f64], dissipation: f64, regrid_jump: f64) -> Monitor {
    let e = energy_density(state, params);
    let (lo, hi) = theta_t.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Monitor {
        t: state.t,
        dt,
        gradient: state.gradient_sup(),
        origin_slope: state.origin_slope(),
        energy: dirichlet_energy(state, params),
        flow_energy: flow_energy(state, params.m),
        sup_energy_density: e.iter().fold(0.0, |a: f64, &b| a.max(b)),
        level: state.grid.level(),
        nodes: state.grid.nodes().len(),
        theta_t_min: lo,
        theta_t_max: hi,
        dissipation,
        regrid_jump,
    }
}

/// Largest step allowed by the explicit treatment of the sine term.
fn explicit_cap(state: &FlowState, m: u32, sigma: f64) -> f64 {
    let r_min = state
        .r()
        .iter()
        .zip(&state.theta)
        .skip(1)
        .filter(|(_, t)| t.abs() > 0.1)
        .map(|(r, _)| *r)
        .fold(f64::INFINITY, f64::min);
    sigma * r_min * r_min / (m as f64 - 1.0).max(1.0)
}

/// Runs the flow until `stop` fires and returns the trace.
pub fn run_flow(params: &FlowParams, config: &TimeStepperConfig, stop: &StopRule) -> Result<FlowTrace, PdeError> {
    let (trace, err) = run_flow_partial(params, config, stop)?;
    match err {
        Some(e) => Err(e),
        None => Ok(trace),
    }
}

/// Like [`run_flow`], but a failure after the first step still returns the
/// trace recorded so far, with the stop reason set accordingly.
pub fn run_flow_partial(params: &FlowParams, config: &TimeStepperConfig, stop: &StopRule) -> Result<(FlowTrace, Option<PdeError>), PdeError> {
    params.validate()?;
    config.validate()?;
    let state = initial_state(params, uniform_grid(params, config)?)?;
    let n0 = state.theta.len();
    let initial = monitor(&state, params, 0.0, &vec![0.0; n0], 0.0, 0.0);
    let mut trace = FlowTrace {
        params: params.clone(),
        config: config.clone(),
        stop: *stop,
        stop_reason: StopReason::TimeReached,
        snapshots: vec![Snapshot { state: state.clone(), theta_t: vec![0.0; n0] }],
        monitors: Vec::new(),
        initial,
    };
    if !(stop.t_end > 0.0) || stop.m_stop.is_some_and(|ms| initial.gradient >= ms) {
        trace.stop_reason = StopReason::Degenerate;
        return Ok((trace, None));
    }

    let mut current = Snapshot { state, theta_t: vec![0.0; n0] };
    let result = integrate(&mut trace, &mut current, params, config, stop);
    match result {
        Ok(reason) => {
            trace.stop_reason = reason;
            Ok((trace, None))
        }
        Err(e) => {
            if trace.snapshots.last().is_some_and(|s| s.state.t < current.state.t) {
                trace.snapshots.push(current);
            }
            trace.stop_reason = match e {
                PdeError::ResolutionExhausted { .. } => StopReason::ResolutionExhausted,
                ref other => StopReason::Failed(other.to_string()),
            };
            Ok((trace, Some(e)))
        }
    }
}

fn integrate(
    trace: &mut FlowTrace,
    current: &mut Snapshot,
    params: &FlowParams,
    config: &TimeStepperConfig,
    stop: &StopRule,
) -> Result<StopReason, PdeError> {
    let mut state = current.state.clone();
    let octave = 2f64.powf(1.0 / config.snapshots.per_octave.max(1) as f64);
    let mut next_gradient = next_power(state.gradient_sup(), octave);
    let every = config.snapshots.every.filter(|e| *e > 0.0);
    let mut next_every = every;
    let mut out_times: Vec<f64> = config.snapshots.times.iter().copied().filter(|&t| t > 0.0 && t < stop.t_end).collect();
    out_times.sort_by(f64::total_cmp);
    out_times.dedup();
    let mut out_idx = 0;

    let mut op = Operator::new(&state.grid, params);
    let mut dt = config.dt_init;
    let mut last_theta_t = current.theta_t.clone();
    for _ in 0..config.max_steps {
        // Regrid until the gradient scale is resolved.
        let mut jump = 0.0;
        if needs_refinement(&state, &config.grid) {
            if let Some(last) = trace.snapshots.last() {
                if last.state.t < state.t {
                    // Keep the last state on its own grid before it changes.
                    trace.snapshots.push(Snapshot { state: state.clone(), theta_t: last_theta_t.clone() });
                }
            }
            let before = flow_energy(&state, params.m);
            while needs_refinement(&state, &config.grid) {
                    state = refine_in_run(&state, &config.grid, params)?;
            }
            jump = flow_energy(&state, params.m) - before;
            op = Operator::new(&state.grid, params);
        }

        let target = match out_times.get(out_idx) {
            Some(&t) => t.min(stop.t_end),
            None => stop.t_end,
        };
        dt = dt.min(config.dt_max);
        if let Some(sigma) = config.cfl_sigma {
            dt = dt.min(explicit_cap(&state, params.m, sigma));
        }
        let (outcome, used_dt) = loop {
            let hits = state.t + dt >= target * (1.0 - 1e-14);
            let t_new = if hits { target } else { state.t + dt };
            let out = try_step(&op, &state, t_new - state.t, t_new, params, config.scheme, None)?;
            if out.error <= config.tol {
                break (out, t_new - state.t);
            }
            let factor = (config.dt_safety * (config.tol / out.error).sqrt()).clamp(0.2, 0.5);
            dt = (t_new - state.t) * factor;
            if dt < 1e-15 * state.t.abs().max(1e-300) || dt < 1e-300 {
                return Err(PdeError::TimeStepUnderflow { t: state.t, dt });
            }
        };
        let grow = if outcome.error > 0.0 { config.dt_safety * (config.tol / outcome.error).sqrt() } else { 2.0 };
        dt = used_dt * grow.clamp(0.2, 2.0);

        state = outcome.state;
        last_theta_t = outcome.theta_t;
        current.state = state.clone();
        current.theta_t = last_theta_t.clone();
        let mon = monitor(&state, params, used_dt, &last_theta_t, outcome.dissipation, jump);
        trace.monitors.push(mon);

        let mut take = false;
        if mon.gradient >= next_gradient {
            take = true;
            next_gradient = next_power(mon.gradient, octave);
        }
        if let (Some(e), Some(ne)) = (every, next_every) {
            if state.t >= ne * (1.0 - 1e-12) {
                take = true;
                let mut k = ne;
                while k <= state.t * (1.0 + 1e-12) {
                    k += e;
                }
                next_every = Some(k);
            }
        }
        if out_idx < out_times.len() && state.t >= out_times[out_idx] {
            take = true;
            while out_idx < out_times.len() && out_times[out_idx] <= state.t {
                out_idx += 1;
            }
        }

        let reason = if state.t >= stop.t_end {
            Some(StopReason::TimeReached)
        } else if stop.m_stop.is_some_and(|ms| mon.gradient >= ms) {
            Some(StopReason::GradientThreshold)
        } else if stop.steady_tol.is_some_and(|tol| mon.theta_t_sup() <= tol) {
            Some(StopReason::Steady)
        } else {
            None
        };
        if take || reason.is_some() {
            trace.snapshots.push(Snapshot { state: state.clone(), theta_t: last_theta_t.clone() });
        }
        if let Some(r) = reason {
            return Ok(r);
        }
    }
    Err(PdeError::StepLimit(config.max_steps))
}

fn next_power(x: f64, base: f64) -> f64 {
    let k = (x.max(1e-300).ln() / base.ln()).floor() + 1.0;
    base.powf(k)
}
