//! Method-of-lines solver for the radial flow
//!
//! ```text
//! theta_t = g^{-1}(r) (theta_rr + (m-1)/r theta_r - (m-1)/(2 r^2) sin(2 theta))
//! ```
//!
//! with `g^{-1} = 1` on flat balls and `(1 + r^2)^2` in the stereographic
//! chart of the sphere. Space is discretized by a variational finite-volume
//! scheme on dyadically graded grids, time by IMEX Runge-Kutta methods that
//! treat the linear part implicitly.

mod export;
mod initial;
mod operator;
mod run;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::SingularPivot;
use crate::model::{FlowParams, FlowState, GridError, ModelError, RadialGrid};
use crate::steady::SteadyError;

pub use export::{content_hash, input_hash, write_monitors_csv, write_snapshots_csv, write_trace, TraceManifest};
pub use initial::{initial_state, superharmonic_profile};
pub use run::{needs_refinement, regrid, run_flow, run_flow_partial, step, step_forced, StepOutcome};

pub(crate) use operator::Operator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("step rejected: error estimate {error:e} exceeds tolerance {tol:e}")]
    StepRejected { error: f64, tol: f64 },
    #[error(transparent)]
    LinearSolveFailure(SingularPivot),
    #[error("resolution exhausted at t = {t}: gradient {gradient:e} needs more than {max_depth} refinement levels")]
    ResolutionExhausted { t: f64, gradient: f64, max_depth: u32 },
    #[error("time step underflow at t = {t} (dt = {dt:e})")]
    TimeStepUnderflow { t: f64, dt: f64 },
    #[error("step limit {0} reached")]
    StepLimit(usize),
    #[error("non-finite solution at t = {0}")]
    NonFinite(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("initial data: {0}")]
    Steady(#[from] SteadyError),
}

/// Time integrator. Both treat the linear radial operator implicitly and
/// the bounded remainder of the sine term explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// IMEX Euler. First order, energy dissipating and order preserving for
    /// every step size.
    Imex1,
    /// The stiffly accurate two-stage scheme ARS(2,2,2). Second order.
    Imex2,
}

/// Refinement policy of the radial grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridPolicy {
    /// Cells of the uniform base grid.
    pub base_cells: usize,
    /// Minimum number of grid points across the gradient scale `1/m(t)`.
    pub p_min: f64,
    /// New cells added per refinement level.
    pub cells_per_level: usize,
    pub max_depth: u32,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self { base_cells: 512, p_min: 16.0, cells_per_level: 128, max_depth: 30 }
    }
}

/// Which states are kept in the trace besides the first and the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnapshotPolicy {
    /// Snapshots per doubling of the gradient `m(t)`.
    pub per_octave: u32,
    /// Uniform cadence in time.
    pub every: Option<f64>,
    /// Times hit exactly by the stepper.
    pub times: Vec<f64>,
}

impl Default for SnapshotPolicy {
    fn default() -> Self {
        Self { per_octave: 4, every: None, times: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeStepperConfig {
    pub scheme: Scheme,
    pub dt_init: f64,
    /// Safety factor of the step size controller, in `(0, 1]`.
    pub dt_safety: f64,
    pub dt_max: f64,
    /// `dt <= cfl_sigma * min r_i^2 / (m-1)` over nodes with `|theta| > 0.1`;
    /// `None` leaves the step to the error controller alone.
    pub cfl_sigma: Option<f64>,
    /// Local error tolerance (sup norm, radians).
    pub tol: f64,
    pub grid: GridPolicy,
    pub snapshots: SnapshotPolicy,
    pub max_steps: usize,
}

impl Default for TimeStepperConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Imex2,
            dt_init: 1e-6,
            dt_safety: 0.9,
            dt_max: 0.02,
            cfl_sigma: Some(0.5),
            tol: 1e-6,
            grid: GridPolicy::default(),
            snapshots: SnapshotPolicy::default(),
            max_steps: 5_000_000,
        }
    }
}

impl TimeStepperConfig {
    /// Twice the spatial resolution, a quarter of the tolerance and half the
    /// maximal step.
    pub fn refined(&self) -> Self {
        let mut c = self.clone();
        c.grid.base_cells *= 2;
        c.grid.p_min *= 2.0;
        c.tol /= 4.0;
        c.dt_max /= 2.0;
        c
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what: &str| Err(ModelError::Compatibility(format!("stepper config: {what}")));
        if !(self.dt_init > 0.0) || !(self.dt_max > 0.0) || !(self.tol > 0.0) {
            return bad("dt_init, dt_max and tol must be positive");
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return bad("dt_safety must lie in (0, 1]");
        }
        if self.grid.base_cells < 3 || !(self.grid.p_min > 0.0) || self.grid.cells_per_level < 2 {
            return bad("grid policy out of range");
        }
        Ok(())
    }
}

/// When [`run_flow`] stops. Every criterion that is set is checked after each
/// accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub t_end: f64,
    /// Stop once `m(t) = sup |theta_r| >= m_stop`.
    pub m_stop: Option<f64>,
    /// Stop once `sup |theta_t| <= steady_tol`.
    pub steady_tol: Option<f64>,
}

impl StopRule {
    /// `m_stop = 10^3 / R`, `steady_tol = 1e-6`.
    pub fn standard(radius: f64, t_end: f64) -> Self {
        Self { t_end, m_stop: Some(1e3 / radius), steady_tol: Some(1e-6) }
    }

    pub fn until(t_end: f64) -> Self {
        Self { t_end, m_stop: None, steady_tol: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TimeReached,
    /// `m(t)` reached `m_stop`: resolved approach to a singularity.
    GradientThreshold,
    Steady,
    /// The stop rule was already satisfied at `t = 0`; no step was taken.
    Degenerate,
    ResolutionExhausted,
    Failed(String),
}

/// Scalars recorded after every accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monitor {
    pub t: f64,
    pub dt: f64,
    /// `m(t) = sup_r |theta_r|`.
    pub gradient: f64,
    pub origin_slope: f64,
    pub energy: f64,
    /// The functional dissipated by the discrete flow (equal to `energy`
    /// for flat metrics).
    pub flow_energy: f64,
    pub sup_energy_density: f64,
    pub level: u32,
    pub nodes: usize,
    pub theta_t_min: f64,
    pub theta_t_max: f64,
    /// `int int g theta_t^2 r^{m-1}` over the step, from the increment quotient.
    pub dissipation: f64,
    /// Change of `flow_energy` caused by regridding right before this step.
    pub regrid_jump: f64,
}

impl Monitor {
    pub fn theta_t_sup(&self) -> f64 {
        self.theta_t_min.abs().max(self.theta_t_max.abs())
    }
}

/// A stored state together with the increment quotient `theta_t` of the step
/// that produced it (zero for the initial state).
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: FlowState,
    pub theta_t: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub params: FlowParams,
    pub config: TimeStepperConfig,
    pub stop: StopRule,
    pub stop_reason: StopReason,
    pub snapshots: Vec<Snapshot>,
    pub monitors: Vec<Monitor>,
    /// Monitor of the initial state (`dt = 0`).
    pub initial: Monitor,
}

impl FlowTrace {
    pub fn final_state(&self) -> &FlowState {
        &self.snapshots.last().expect("trace has at least the initial snapshot").state
    }

    pub fn final_time(&self) -> f64 {
        self.final_state().t
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.state.t).collect()
    }

    /// Initial monitor followed by the per-step monitors.
    pub fn all_monitors(&self) -> impl Iterator<Item = &Monitor> {
        std::iter::once(&self.initial).chain(self.monitors.iter())
    }

    /// Reflection `theta -> -theta` of the whole trace.
    pub fn negated(&self) -> Self {
        let mut t = self.clone();
        t.params.b = -t.params.b;
        for s in &mut t.snapshots {
            s.state = s.state.negated();
            s.theta_t.iter_mut().for_each(|v| *v = -*v);
        }
        for m in t.monitors.iter_mut().chain(std::iter::once(&mut t.initial)) {
            m.origin_slope = -m.origin_slope;
            std::mem::swap(&mut m.theta_t_min, &mut m.theta_t_max);
            m.theta_t_min = -m.theta_t_min;
            m.theta_t_max = -m.theta_t_max;
        }
        t
    }
}

fn uniform_grid(params: &FlowParams, config: &TimeStepperConfig) -> Result<Arc<RadialGrid>, PdeError> {
    Ok(Arc::new(RadialGrid::uniform(params.radius, config.grid.base_cells)?))
}
