use serde::{Deserialize, Serialize};

use crate::pde::FlowTrace;

/// Monotonicity class of the tail of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    StrictlyIncreasing,
    StrictlyDecreasing,
    /// Changes slower than the flatness rate.
    Constant,
    /// Fewer than two samples.
    Undetermined,
}

/// `theta_r(0, t)` at every accepted step together with the largest
/// monotone suffix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginSlopeSeries {
    pub times: Vec<f64>,
    pub slopes: Vec<f64>,
    /// Index into `times` where the monotone suffix starts.
    pub tail_start: usize,
    pub tail: TailKind,
    /// Increments with `|da| <= flat_rate * dt * max(1, |a|)` count as flat.
    pub flat_rate: f64,
}

impl OriginSlopeSeries {
    pub fn tail_times(&self) -> (f64, f64) {
        (self.times[self.tail_start], *self.times.last().unwrap_or(&f64::NAN))
    }

    pub fn negated(&self) -> Self {
        let tail = match self.tail {
            TailKind::StrictlyIncreasing => TailKind::StrictlyDecreasing,
            TailKind::StrictlyDecreasing => TailKind::StrictlyIncreasing,
            k => k,
        };
        Self { slopes: self.slopes.iter().map(|v| -v).collect(), tail, ..self.clone() }
    }
}

pub const DEFAULT_FLAT_RATE: f64 = 1e-5;

pub fn origin_slope_series(trace: &FlowTrace, flat_rate: f64) -> OriginSlopeSeries {
    let (times, slopes): (Vec<f64>, Vec<f64>) = trace.all_monitors().map(|m| (m.t, m.origin_slope)).unzip();
    let class = |i: usize| {
        let da = slopes[i + 1] - slopes[i];
        let dt = times[i + 1] - times[i];
        if da.abs() <= flat_rate * dt * slopes[i].abs().max(1.0) {
            0
        } else if da > 0.0 {
            1
        } else {
            -1
        }
    };
    let n = times.len();
    if n < 2 {
        return OriginSlopeSeries { times, slopes, tail_start: 0, tail: TailKind::Undetermined, flat_rate };
    }
    let last = class(n - 2);
    let mut start = n - 2;
    while start > 0 && class(start - 1) == last {
        start -= 1;
    }
    let tail = match last {
        1 => TailKind::StrictlyIncreasing,
        -1 => TailKind::StrictlyDecreasing,
        _ => TailKind::Constant,
    };
    OriginSlopeSeries { times, slopes, tail_start: start, tail, flat_rate }
}
