use serde::{Deserialize, Serialize};

use super::{shoot_with_extrema, Shooter, SteadyError};

/// One `omega_1` evaluation in a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyEntry {
    pub shooter: Shooter,
    pub a: f64,
    pub tol: f64,
    pub omega_1: f64,
}

/// Reference `theta_m` together with the runs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReference {
    pub m: u32,
    pub theta_m: f64,
    /// Largest deviation of any study entry from `theta_m`.
    pub spread: f64,
    pub study: Vec<StudyEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub version: u32,
    pub entries: Vec<ThresholdReference>,
}

impl ThresholdTable {
    pub fn get(&self, m: u32) -> Option<&ThresholdReference> {
        self.entries.iter().find(|e| e.m == m)
    }
}

pub const STUDY_TOLERANCES: [f64; 3] = [1e-9, 1e-10, 1e-11];
pub const STUDY_SLOPES: [f64; 2] = [1.0, 10.0];

/// Computes `omega_1` with both integrators, each slope in
/// [`STUDY_SLOPES`] and each tolerance in [`STUDY_TOLERANCES`]. The
/// reference value is the Dormand-Prince result at `a = 1` and the tightest
/// tolerance.
pub fn threshold_study(m: u32) -> Result<ThresholdReference, SteadyError> {
    if !(3..7).contains(&m) {
        return Err(SteadyError::UnsupportedDimension(m));
    }
    let mut study = Vec::new();
    for shooter in [Shooter::DormandPrince, Shooter::Rk4Doubling] {
        for a in STUDY_SLOPES {
            for tol in STUDY_TOLERANCES {
                let p = shoot_with_extrema(m, a, 1, tol, shooter)?;
                study.push(StudyEntry { shooter, a, tol, omega_1: p.extrema[0].omega });
            }
        }
    }
    let theta_m = study[STUDY_TOLERANCES.len() - 1].omega_1;
    let spread = study.iter().map(|e| (e.omega_1 - theta_m).abs()).fold(0.0, f64::max);
    Ok(ThresholdReference { m, theta_m, spread, study })
}

/// The table stored in `data/theta_m.json`.
pub fn reference_thresholds() -> ThresholdTable {
    serde_json::from_str(include_str!("../../data/theta_m.json")).expect("bundled threshold table parses")
}
