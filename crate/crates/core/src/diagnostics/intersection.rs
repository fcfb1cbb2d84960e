use serde::{Deserialize, Serialize};

use crate::interp::Pchip;
use crate::model::FlowState;
use crate::pde::FlowTrace;
use crate::steady::SteadyProfile;

use super::{zero_number, DiagnosticsError};

/// What a trace is intersected with.
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    Constant(f64),
    Profile(&'a SteadyProfile),
    /// Another run; compared at the snapshot times both traces share.
    Trace(&'a FlowTrace),
}

/// Zero numbers `Z(theta(., t) - reference)` along a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCountSeries {
    pub times: Vec<f64>,
    /// `None` where every sample of the difference is below tolerance.
    pub counts: Vec<Option<usize>>,
    pub eta: f64,
    /// Times at which the count strictly decreased.
    pub drop_events: Vec<f64>,
}

impl ZeroCountSeries {
    fn from_counts(times: Vec<f64>, counts: Vec<Option<usize>>, eta: f64) -> Self {
        let mut drop_events = Vec::new();
        let mut prev: Option<usize> = None;
        for (t, c) in times.iter().zip(&counts) {
            if let Some(c) = *c {
                if prev.is_some_and(|p| c < p) {
                    drop_events.push(*t);
                }
                prev = Some(c);
            }
        }
        Self { times, counts, eta, drop_events }
    }

    /// Times at which the count exceeds the previous defined count.
    pub fn increases(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut prev: Option<usize> = None;
        for (t, c) in self.times.iter().zip(&self.counts) {
            if let Some(c) = *c {
                if prev.is_some_and(|p| c > p) {
                    out.push(*t);
                }
                prev = Some(c);
            }
        }
        out
    }

    pub fn is_non_increasing(&self) -> bool {
        self.increases().is_empty()
    }

    pub fn max_count(&self) -> Option<usize> {
        self.counts.iter().flatten().copied().max()
    }
}

/// `a - b` on the union of both grids. Values off a grid's nodes are filled by
/// monotone cubic interpolation.
pub fn state_difference(a: &FlowState, b: &FlowState) -> Vec<f64> {
    if a.r() == b.r() {
        return a.theta.iter().zip(&b.theta).map(|(x, y)| x - y).collect();
    }
    let mut nodes: Vec<f64> = a.r().iter().chain(b.r()).copied().collect();
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let fa = Pchip::new(a.r(), &a.theta);
    let fb = Pchip::new(b.r(), &b.theta);
    nodes.iter().map(|&r| fa.eval(r) - fb.eval(r)).collect()
}

/// [`zero_number`] of `theta(., t) - reference` at every snapshot of
/// `trace` (every shared snapshot time for a trace reference).
///
/// For a trace reference, samples with `|a - b|` at or below the larger
/// `config.tol` of the two runs are dropped as well.
pub fn intersection_series(trace: &FlowTrace, reference: Reference, eta: f64) -> ZeroCountSeries {
    let mut times = Vec::new();
    let mut counts = Vec::new();
    for snap in &trace.snapshots {
        let s = &snap.state;
        let diff: Vec<f64> = match reference {
            Reference::Constant(c) => s.theta.iter().map(|v| v - c).collect(),
            Reference::Profile(p) => s.r().iter().zip(&s.theta).map(|(&r, v)| v - p.phi(r)).collect(),
            Reference::Trace(other) => match other.snapshots.iter().find(|o| o.state.t == s.t) {
                Some(o) => {
                    let floor = trace.config.tol.max(other.config.tol);
                    state_difference(s, &o.state).into_iter().map(|d| if d.abs() <= floor { 0.0 } else { d }).collect()
                }
                None => continue,
            },
        };
        times.push(s.t);
        counts.push(match zero_number(&diff, eta) {
            Ok(c) => Some(c),
            Err(DiagnosticsError::AllBelowTolerance) => None,
        });
    }
    ZeroCountSeries::from_counts(times, counts, eta)
}
