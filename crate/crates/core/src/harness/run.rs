use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::blowup::{
    classify_rate, estimate_from_trace, local_blowup_time, monotone_in_time_check, Classification, RateOptions,
};
use crate::diagnostics::{energy_dissipation_audit, gradient_bound_fit, origin_slope_series, DEFAULT_FLAT_RATE};
use crate::pde::{content_hash, run_flow, write_monitors_csv, FlowTrace, StopReason};
use crate::selfsim::{energy_trace, monotonicity_report, refined_typeii_functional, to_selfsim, Cutoff, FrameGrid, GrowthPreset};
use crate::steady::shoot_profile;

use super::{ExpectedOutcome, HarnessError, Scenario};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    GlobalExistence,
    BlowupResolved,
    TimeReached,
    Degenerate,
    SolverFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: Scenario,
    pub input_hash: String,
    pub tool_version: String,
    pub stop_reason: StopReason,
    pub outcome: RunOutcome,
    pub classification: Option<Classification>,
    pub omega_hat: Option<f64>,
    /// Two-point extrapolation of the blowup time from the last monitors.
    /// Gradient and self-similar reports use it when `omega_hat` is absent.
    pub omega_local: Option<f64>,
    /// Whether the outcome agrees with the scenario's expectation; `None`
    /// for unspecified expectations.
    pub expected_matched: Option<bool>,
    pub steps: usize,
    pub snapshots: usize,
    pub final_time: f64,
    /// Every file in the run directory, relative and sorted.
    pub files: Vec<String>,
}

#[derive(Serialize)]
struct HashedInputs<'a> {
    tool_version: &'a str,
    params: &'a crate::model::FlowParams,
    config: &'a crate::pde::TimeStepperConfig,
    stop: &'a crate::pde::StopRule,
    diagnostics: &'a super::DiagnosticsToggles,
    expected: ExpectedOutcome,
}

/// Content hash of everything that determines the run's artifacts (the name
/// is a label and does not enter).
pub fn scenario_hash(s: &Scenario) -> String {
    let inputs = HashedInputs {
        tool_version: TOOL_VERSION,
        params: &s.params,
        config: &s.config,
        stop: &s.stop,
        diagnostics: &s.diagnostics,
        expected: s.expected,
    };
    content_hash(&serde_json::to_vec(&inputs).expect("scenario serializes"))
}

/// Runs the flow of a scenario without writing anything.
pub fn run_trace(s: &Scenario) -> Result<FlowTrace, crate::pde::PdeError> {
    run_flow(&s.params, &s.config, &s.stop)
}

fn outcome_of(reason: &StopReason) -> RunOutcome {
    match reason {
        StopReason::Steady => RunOutcome::GlobalExistence,
        StopReason::GradientThreshold => RunOutcome::BlowupResolved,
        StopReason::TimeReached => RunOutcome::TimeReached,
        StopReason::Degenerate => RunOutcome::Degenerate,
        StopReason::ResolutionExhausted | StopReason::Failed(_) => RunOutcome::SolverFailure,
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn path(&mut self, rel: &str) -> Result<PathBuf, HarnessError> {
        let p = self.dir.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(rel.to_string());
        Ok(p)
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), HarnessError> {
        let p = self.path(rel)?;
        let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Config(e.to_string()))?;
        text.push('\n');
        fs::write(p, text)?;
        Ok(())
    }

    fn csv(&mut self, rel: &str, f: impl FnOnce(BufWriter<fs::File>) -> csv::Result<()>) -> Result<(), HarnessError> {
        let p = self.path(rel)?;
        f(BufWriter::new(fs::File::create(p)?)).map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(())
    }
}

/// Runs a scenario and writes its artifacts to `out_root/runs/<hash>/`:
/// `manifest.json`, `timing.json`, `monitors.csv`, `snapshots/` and
/// `reports/`. A degenerate run writes the manifest alone. Solver errors end
/// up in the manifest's stop reason. The trace is returned when the solver
/// produced one.
pub fn run_scenario(s: &Scenario, out_root: &Path) -> Result<(RunManifest, Option<FlowTrace>), HarnessError> {
    let hash = scenario_hash(s);
    let dir = out_root.join("runs").join(&hash);
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    fs::create_dir_all(&dir)?;
    let mut w = Writer { dir, files: Vec::new() };
    let start = Instant::now();
    let result = run_trace(s);
    let mut manifest = RunManifest {
        scenario: s.clone(),
        input_hash: hash,
        tool_version: TOOL_VERSION.to_string(),
        stop_reason: StopReason::Degenerate,
        outcome: RunOutcome::Degenerate,
        classification: None,
        omega_hat: None,
        omega_local: None,
        expected_matched: None,
        steps: 0,
        snapshots: 0,
        final_time: 0.0,
        files: Vec::new(),
    };
    let trace = match result {
        Ok(trace) => trace,
        Err(e) => {
            manifest.stop_reason = StopReason::Failed(e.to_string());
            manifest.outcome = RunOutcome::SolverFailure;
            manifest.expected_matched = expectation(s.expected, &manifest);
            return Ok((finish(w, manifest, None)?, None));
        }
    };
    manifest.stop_reason = trace.stop_reason.clone();
    manifest.outcome = outcome_of(&trace.stop_reason);
    manifest.steps = trace.monitors.len();
    manifest.snapshots = trace.snapshots.len();
    manifest.final_time = trace.final_time();
    if manifest.outcome == RunOutcome::Degenerate {
        manifest.expected_matched = expectation(s.expected, &manifest);
        return Ok((finish(w, manifest, None)?, Some(trace)));
    }
    w.csv("monitors.csv", |out| write_monitors_csv(&trace, out))?;
    if s.diagnostics.snapshots {
        write_snapshots(&mut w, &trace)?;
    }
    diagnostics(&mut w, s, &trace, &mut manifest)?;
    manifest.expected_matched = expectation(s.expected, &manifest);
    let wall = start.elapsed().as_secs_f64();
    Ok((finish(w, manifest, Some(wall))?, Some(trace)))
}

fn expectation(expected: ExpectedOutcome, m: &RunManifest) -> Option<bool> {
    match expected {
        ExpectedOutcome::Unspecified => None,
        ExpectedOutcome::GlobalExistence => {
            Some(matches!(m.outcome, RunOutcome::GlobalExistence | RunOutcome::TimeReached))
        }
        ExpectedOutcome::BlowupTypeI => {
            Some(m.outcome == RunOutcome::BlowupResolved && m.classification == Some(Classification::TypeI))
        }
    }
}

fn write_snapshots(w: &mut Writer, trace: &FlowTrace) -> Result<(), HarnessError> {
    w.csv("snapshots/index.csv", |out| {
        let mut c = csv::Writer::from_writer(out);
        c.write_record(["snapshot", "t", "nodes", "gradient", "file"])?;
        for (k, s) in trace.snapshots.iter().enumerate() {
            c.write_record([
                k.to_string(),
                format!("{:e}", s.state.t),
                s.state.theta.len().to_string(),
                format!("{:e}", s.state.gradient_sup()),
                format!("snap_{k:05}.csv"),
            ])?;
        }
        c.flush()?;
        Ok(())
    })?;
    for (k, s) in trace.snapshots.iter().enumerate() {
        w.csv(&format!("snapshots/snap_{k:05}.csv"), |out| {
            let mut c = csv::Writer::from_writer(out);
            c.write_record(["r", "theta", "theta_t"])?;
            for ((r, th), tt) in s.state.r().iter().zip(&s.state.theta).zip(&s.theta_t) {
                c.write_record([format!("{r:e}"), format!("{th:e}"), format!("{tt:e}")])?;
            }
            c.flush()?;
            Ok(())
        })?;
    }
    Ok(())
}

fn diagnostics(w: &mut Writer, s: &Scenario, trace: &FlowTrace, manifest: &mut RunManifest) -> Result<(), HarnessError> {
    let d = s.diagnostics;
    if d.energy_audit {
        w.json("reports/energy_audit.json", &energy_dissipation_audit(trace))?;
    }
    if d.origin_slope {
        w.json("reports/origin_slope.json", &origin_slope_series(trace, DEFAULT_FLAT_RATE))?;
    }
    if d.monotone_in_time {
        w.json("reports/monotone_in_time.json", &monotone_in_time_check(trace, 1e-8))?;
    }
    if manifest.outcome != RunOutcome::BlowupResolved {
        return Ok(());
    }
    let fit = estimate_from_trace(trace);
    let omega = fit.as_ref().ok().map(|f| f.omega).filter(|o| *o > trace.final_time());
    manifest.omega_hat = omega;
    manifest.omega_local = local_blowup_time(trace).filter(|o| *o > trace.final_time());
    if d.blowup {
        let bubble = shoot_profile(s.params.m, 1.0, 5.0, 1e-12).ok();
        let report = classify_rate(trace, fit.clone(), bubble.as_ref(), RateOptions::default());
        manifest.classification = Some(report.classification);
        w.json("reports/blowup_fit.json", &fit.as_ref().ok())?;
        w.csv("reports/q_series.csv", |out| {
            let mut c = csv::Writer::from_writer(out);
            c.write_record(["t", "q"])?;
            for (t, q) in &report.q_series {
                c.write_record([format!("{t:e}"), format!("{q:e}")])?;
            }
            c.flush()?;
            Ok(())
        })?;
        let mut summary = report;
        summary.q_series.clear();
        w.json("reports/blowup.json", &summary)?;
    }
    let Some(omega) = omega.or(manifest.omega_local) else { return Ok(()) };
    if d.gradient_bound {
        w.json("reports/gradient_bound.json", &gradient_bound_fit(trace, omega))?;
    }
    if d.selfsim {
        let frames = to_selfsim(trace, omega, &FrameGrid::default()).map_err(|e| HarnessError::Config(e.to_string()))?;
        let cutoff = Cutoff { delta: 0.5 * s.params.radius };
        let et = energy_trace(&frames, cutoff, trace.initial.flow_energy);
        w.csv("reports/selfsim_energy.csv", |out| et.write_csv(out))?;
        if let Ok(rep) = monotonicity_report(&et, 2.0, 9.0) {
            w.json("reports/monotonicity.json", &rep)?;
        }
        w.json("reports/typeii_linear.json", &refined_typeii_functional(trace, omega, &GrowthPreset::Linear))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Timing {
    wall_seconds: f64,
}

fn finish(mut w: Writer, mut manifest: RunManifest, wall: Option<f64>) -> Result<RunManifest, HarnessError> {
    if let Some(wall_seconds) = wall {
        w.json("timing.json", &Timing { wall_seconds })?;
    }
    w.files.push("manifest.json".into());
    w.files.sort();
    manifest.files = std::mem::take(&mut w.files);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| HarnessError::Config(e.to_string()))?;
    text.push('\n');
    fs::write(w.dir.join("manifest.json"), text)?;
    Ok(manifest)
}

/// Relative paths of every file below `dir`, sorted.
pub fn list_files(dir: &Path) -> std::io::Result<Vec<String>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).expect("inside run dir");
                out.push(rel.to_string_lossy().replace('\\', "/"));
            }
        }
    }
    out.sort();
    Ok(out)
}
