use serde::{Deserialize, Serialize};

use crate::pde::FlowTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditInterval {
    pub t0: f64,
    pub t1: f64,
    pub energy0: f64,
    pub energy1: f64,
    /// Sum of the per-step dissipation over the interval.
    pub dissipation: f64,
    /// Energy change caused by regridding inside the interval.
    pub regrid_jump: f64,
    /// `|E(t1) - E(t0) + dissipation - regrid_jump|`.
    pub defect: f64,
    /// `defect / max(dissipation, 1e-12 E(0))`.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    pub initial_energy: f64,
    pub intervals: Vec<AuditInterval>,
    pub cumulative_dissipation: f64,
    /// Largest step-to-step increase of the energy, regridding excluded.
    pub max_energy_increase: f64,
}

impl EnergyAudit {
    pub fn worst_relative(&self) -> f64 {
        self.intervals.iter().map(|i| i.relative).fold(0.0, f64::max)
    }

    /// Whether the total dissipation stays below `E(0) (1 + tol)`.
    pub fn dissipation_bounded(&self, tol: f64) -> bool {
        self.cumulative_dissipation <= self.initial_energy * (1.0 + tol)
    }
}

/// Compares the energy balance `E(t1) - E(t0) = -int int g theta_t^2` between
/// consecutive snapshots, with `theta_t` the increment quotient of each step.
/// The audited energy is the flow's own dissipated functional.
pub fn energy_dissipation_audit(trace: &FlowTrace) -> EnergyAudit {
    let monitors: Vec<_> = trace.all_monitors().copied().collect();
    let e0 = trace.initial.flow_energy;
    let floor = 1e-12 * e0.abs().max(f64::MIN_POSITIVE);
    let mut intervals = Vec::new();
    let mut k = 0;
    let mut max_increase = f64::NEG_INFINITY;
    for w in monitors.windows(2) {
        max_increase = max_increase.max(w[1].flow_energy - w[1].regrid_jump - w[0].flow_energy);
    }
    let times = trace.snapshot_times();
    for w in times.windows(2) {
        while k < monitors.len() && monitors[k].t < w[0] {
            k += 1;
        }
        let Some(start) = monitors.get(k).filter(|m| m.t == w[0]) else { continue };
        let (mut dissipation, mut jump) = (0.0, 0.0);
        let mut end = start;
        for m in &monitors[k + 1..] {
            if m.t > w[1] {
                break;
            }
            dissipation += m.dissipation;
            jump += m.regrid_jump;
            end = m;
        }
        if end.t != w[1] {
            continue;
        }
        let defect = (end.flow_energy - start.flow_energy + dissipation - jump).abs();
        intervals.push(AuditInterval {
            t0: w[0],
            t1: w[1],
            energy0: start.flow_energy,
            energy1: end.flow_energy,
            dissipation,
            regrid_jump: jump,
            defect,
            relative: defect / dissipation.max(floor),
        });
    }
    EnergyAudit {
        initial_energy: e0,
        intervals,
        cumulative_dissipation: monitors.iter().map(|m| m.dissipation).sum(),
        max_energy_increase: if monitors.len() > 1 { max_increase } else { 0.0 },
    }
}
