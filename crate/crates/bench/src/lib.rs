//! Shared fixtures for the hmflow benchmarks.

use hmflow_core::model::FlowParams;
use hmflow_core::pde::{run_flow, FlowTrace, StopRule, TimeStepperConfig};

/// Stepper settings with a coarser base grid so a single iteration stays
/// well under a second.
pub fn coarse_config(base_cells: usize) -> TimeStepperConfig {
    let mut cfg = TimeStepperConfig::default();
    cfg.grid.base_cells = base_cells;
    cfg
}

/// Linear data run until the gradient reaches `m_stop` or the flow settles.
pub fn linear_trace(m: u32, b: f64, base_cells: usize, m_stop: f64) -> FlowTrace {
    let stop = StopRule { t_end: 10.0, m_stop: Some(m_stop), steady_tol: Some(1e-6) };
    run_flow(&FlowParams::flat_linear(m, 1.0, b), &coarse_config(base_cells), &stop).expect("fixture run")
}
