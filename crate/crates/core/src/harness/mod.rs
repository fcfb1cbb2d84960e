//! Scenarios and presets, content-addressed run directories, configuration
//! files and parameter sweeps.

mod config;
mod run;
mod sweep;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FlowParams, InitialData, Metric};
use crate::pde::{Scheme, StopRule, TimeStepperConfig};

pub use config::{load_config, load_config_file, merge_overrides};
pub use run::{list_files, run_scenario, run_trace, scenario_hash, RunManifest, RunOutcome, TOOL_VERSION};
pub use sweep::{random_pair_suite, sweep_boundary_map, DataFamily, PairResult, PairSuite, SweepRow, SweepTable};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Outcome a scenario is expected to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedOutcome {
    BlowupTypeI,
    GlobalExistence,
    Unspecified,
}

/// Which diagnostics run after the flow. Reports are only written when they
/// apply to the way the run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticsToggles {
    pub energy_audit: bool,
    pub origin_slope: bool,
    pub blowup: bool,
    pub gradient_bound: bool,
    pub selfsim: bool,
    pub monotone_in_time: bool,
    pub snapshots: bool,
}

impl Default for DiagnosticsToggles {
    fn default() -> Self {
        Self {
            energy_audit: true,
            origin_slope: true,
            blowup: true,
            gradient_bound: true,
            selfsim: false,
            monotone_in_time: false,
            snapshots: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub params: FlowParams,
    pub config: TimeStepperConfig,
    pub stop: StopRule,
    #[serde(default)]
    pub diagnostics: DiagnosticsToggles,
    pub expected: ExpectedOutcome,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            params: FlowParams::flat_linear(3, 1.0, 1.0),
            config: TimeStepperConfig::default(),
            stop: StopRule::standard(1.0, 10.0),
            diagnostics: DiagnosticsToggles::default(),
            expected: ExpectedOutcome::Unspecified,
        }
    }
}

/// Stop rule of the blowup presets: `m(t) >= 10^4 / R` gives the three
/// decades of gradient growth the blowup time fit needs.
pub fn blowup_stop(radius: f64) -> StopRule {
    StopRule { t_end: 10.0, m_stop: Some(1e4 / radius), steady_tol: Some(1e-6) }
}

pub const PRESET_NAMES: [&str; 5] = ["thm1.1-global", "thm1.1-blowup", "thm7.1-sphere", "selfsim-m2", "steady-m3"];

pub fn preset(name: &str) -> Result<Scenario, HarnessError> {
    let base = Scenario { name: name.to_string(), ..Scenario::default() };
    let s = match name {
        "thm1.1-global" => Scenario { expected: ExpectedOutcome::GlobalExistence, ..base },
        "thm1.1-blowup" => Scenario {
            params: FlowParams::flat_linear(3, 1.0, 3.0),
            stop: blowup_stop(1.0),
            expected: ExpectedOutcome::BlowupTypeI,
            ..base
        },
        "thm7.1-sphere" => Scenario {
            params: FlowParams {
                m: 3,
                radius: 1.0,
                b: PI,
                metric: Metric::SphereStereographic,
                initial_data: InitialData::SuperHarmonic { a: 5.0 },
            },
            config: TimeStepperConfig { scheme: Scheme::Imex1, ..TimeStepperConfig::default() },
            stop: blowup_stop(1.0),
            diagnostics: DiagnosticsToggles { monotone_in_time: true, ..DiagnosticsToggles::default() },
            expected: ExpectedOutcome::BlowupTypeI,
            ..base
        },
        "selfsim-m2" => Scenario {
            params: FlowParams::flat_linear(2, 1.0, 3.5),
            config: TimeStepperConfig { cfl_sigma: None, ..TimeStepperConfig::default() },
            stop: StopRule::standard(1.0, 10.0),
            diagnostics: DiagnosticsToggles { selfsim: true, ..DiagnosticsToggles::default() },
            ..base
        },
        "steady-m3" => {
            let b = crate::steady::shoot_profile(3, 1.0, 1.0, 1e-12)
                .map_err(|e| HarnessError::Config(e.to_string()))?
                .phi(1.0);
            let mut config = TimeStepperConfig::default();
            config.grid.base_cells = 2048;
            config.snapshots.every = Some(0.05);
            Scenario {
                params: FlowParams { m: 3, radius: 1.0, b, metric: Metric::Flat, initial_data: InitialData::Profile { a: 1.0 } },
                config,
                stop: StopRule::until(1.0),
                expected: ExpectedOutcome::GlobalExistence,
                ..base
            }
        }
        other => return Err(HarnessError::UnknownPreset(other.to_string())),
    };
    Ok(s)
}
