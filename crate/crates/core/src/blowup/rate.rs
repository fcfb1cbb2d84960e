use serde::{Deserialize, Serialize};

use crate::pde::{FlowTrace, StopReason};
use crate::steady::SteadyProfile;

use super::bubble::{rescaled_profile_compare, BubbleWindow, MIN_BUBBLE_SLOPE};
use super::BlowupError;

/// Fits with a normalized residual above this value do not follow the
/// `m ~ (omega - t)^{-1/2}` law and are flagged.
pub const FIT_RESIDUAL_THRESHOLD: f64 = 0.1;

/// Gradient growth required before a blowup time is estimated.
const REQUIRED_GROWTH: f64 = 1e3;

/// Line through `m^{-2}` against `t`, fitted by relative least squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    pub omega: f64,
    /// RMS of the relative deviation of `m^{-2}` from the line.
    pub residual: f64,
    pub points: usize,
    /// Time span of the samples used.
    pub window: (f64, f64),
}

impl BlowupFit {
    pub fn flagged(&self) -> bool {
        !(self.residual <= FIT_RESIDUAL_THRESHOLD)
    }
}

/// Estimates the blowup time from the last two decades of `m(t)`.
pub fn estimate_blowup_time(times: &[f64], gradient: &[f64]) -> Result<BlowupFit, BlowupError> {
    assert_eq!(times.len(), gradient.len());
    let lo = gradient.iter().copied().fold(f64::INFINITY, f64::min);
    let last = *gradient.last().unwrap_or(&0.0);
    let growth = last / lo;
    if !(growth >= REQUIRED_GROWTH) {
        return Err(BlowupError::InsufficientGrowth { growth, required: REQUIRED_GROWTH });
    }
    // The window starts where m last dropped below last/100.
    let start = gradient.iter().rposition(|&g| g < 0.01 * last).map_or(0, |i| i + 1);
    let t = &times[start..];
    let q: Vec<f64> = gradient[start..].iter().map(|g| g.powi(-2)).collect();
    // Relative least squares: weights 1 / q^2.
    let w: Vec<f64> = q.iter().map(|v| 1.0 / (v * v)).collect();
    let sw: f64 = w.iter().sum();
    let tm = w.iter().zip(t).map(|(wi, ti)| wi * ti).sum::<f64>() / sw;
    let qm = w.iter().zip(&q).map(|(wi, qi)| wi * qi).sum::<f64>() / sw;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for ((ti, qi), wi) in t.iter().zip(&q).zip(&w) {
        sxx += wi * (ti - tm) * (ti - tm);
        sxy += wi * (ti - tm) * (qi - qm);
    }
    let slope = sxy / sxx;
    let omega = tm - qm / slope;
    let n = t.len() as f64;
    let rms = (t.iter().zip(&q).map(|(ti, qi)| ((qi - qm - slope * (ti - tm)) / qi).powi(2)).sum::<f64>() / n).sqrt();
    Ok(BlowupFit { omega, residual: rms, points: t.len(), window: (t[0], *t.last().unwrap()) })
}

/// [`estimate_blowup_time`] on the monitors of a trace.
pub fn estimate_from_trace(trace: &FlowTrace) -> Result<BlowupFit, BlowupError> {
    let (t, m): (Vec<f64>, Vec<f64>) = trace.all_monitors().map(|m| (m.t, m.gradient)).unzip();
    estimate_blowup_time(&t, &m)
}

/// Blowup time from the last two monitors, extrapolating `m^{-2}` linearly
/// to zero. Needs no growth window, so it applies to runs stopped early.
/// `None` unless `m` grows over the last step.
pub fn local_blowup_time(trace: &FlowTrace) -> Option<f64> {
    let ms: Vec<_> = trace.all_monitors().collect();
    let [.., a, b] = ms.as_slice() else { return None };
    let (qa, qb) = (a.gradient.powi(-2), b.gradient.powi(-2));
    (qa > qb && b.t > a.t).then(|| b.t + qb * (b.t - a.t) / (qa - qb))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    TypeI,
    TypeII,
    Undetermined,
    NoBlowup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    /// Largest `max Q / min Q` accepted as a type I plateau.
    pub ratio_max: f64,
    /// Decades of `omega - t` examined, ending at the last monitor.
    pub decades: f64,
    /// Samples per decade for the trend test.
    pub per_decade: usize,
    /// Smallest `d log Q / d log|log(omega - t)|` that counts as divergence.
    pub min_log_power: f64,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self { ratio_max: 10.0, decades: 2.0, per_decade: 8, min_log_power: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub omega_hat: f64,
    pub fit_residual: f64,
    pub classification: Classification,
    /// `(t, (omega - t) sup_r e(r, t))` for every monitor before `omega`.
    pub q_series: Vec<(f64, f64)>,
    /// `max Q / min Q` over the examined window.
    pub q_ratio: f64,
    /// Fitted power `p` in `Q ~ |log(omega - t)|^p` over the window.
    pub log_power: f64,
    /// Whether the resampled `Q` increases at every step toward `omega`.
    pub q_monotone: bool,
    /// Sup-norm distance of the last snapshot to the bubble, when its slope
    /// is in the bubble regime.
    pub bubble_error: Option<f64>,
    /// `(t, theta_r(0, t))`.
    pub slope_series: Vec<(f64, f64)>,
}

impl BlowupReport {
    fn no_blowup(trace: &FlowTrace) -> Self {
        Self {
            omega_hat: f64::NAN,
            fit_residual: f64::NAN,
            classification: Classification::NoBlowup,
            q_series: Vec::new(),
            q_ratio: f64::NAN,
            log_power: f64::NAN,
            q_monotone: false,
            bubble_error: None,
            slope_series: trace.all_monitors().map(|m| (m.t, m.origin_slope)).collect(),
        }
    }

    /// `Q` resampled at `per_decade` points per decade of `omega - t`, from
    /// the last monitor backwards: `(tau, Q)` with `tau` increasing.
    pub fn resampled_q(&self, decades: f64, per_decade: usize) -> Vec<(f64, f64)> {
        let tau: Vec<f64> = self.q_series.iter().rev().map(|(t, _)| self.omega_hat - t).collect();
        let q: Vec<f64> = self.q_series.iter().rev().map(|(_, q)| *q).collect();
        let Some(&tau0) = tau.first() else { return Vec::new() };
        let steps = (decades * per_decade as f64).round() as usize;
        let mut out = Vec::with_capacity(steps + 1);
        let mut j = 0;
        for k in 0..=steps {
            let target = tau0 * 10f64.powf(k as f64 / per_decade as f64);
            while j + 1 < tau.len() && tau[j + 1] <= target {
                j += 1;
            }
            if j + 1 >= tau.len() {
                if target > tau[j] * (1.0 + 1e-12) {
                    break;
                }
                out.push((target, q[j]));
                continue;
            }
            // Linear in log tau between neighbouring monitors.
            let f = (target.ln() - tau[j].ln()) / (tau[j + 1].ln() - tau[j].ln());
            out.push((target, q[j] + f.clamp(0.0, 1.0) * (q[j + 1] - q[j])));
        }
        out
    }
}

/// Classifies the blowup rate from `Q(t) = (omega - t) sup_r e(r, t)`.
///
/// A window of `decades` decades of `omega - t` ending at the last monitor is
/// examined. The rate is type II when `Q` increases toward `omega` at every
/// resampled point and either grows by more than `ratio_max` or follows at
/// least `|log(omega - t)|^{min_log_power}`. It is type I when `Q` stays
/// within `ratio_max` without such a trend, and undetermined otherwise.
/// Without a usable fit the run counts as no blowup, unless it stopped at
/// the gradient threshold, which leaves the rate undetermined.
pub fn classify_rate(
    trace: &FlowTrace,
    fit: Result<BlowupFit, BlowupError>,
    bubble: Option<&SteadyProfile>,
    opts: RateOptions,
) -> BlowupReport {
    let fit = match fit {
        Ok(f) if f.omega > trace.final_time() => f,
        _ => {
            let mut report = BlowupReport::no_blowup(trace);
            if trace.stop_reason == StopReason::GradientThreshold {
                report.classification = Classification::Undetermined;
            }
            return report;
        }
    };
    let omega = fit.omega;
    let q_series: Vec<(f64, f64)> = trace
        .all_monitors()
        .filter(|m| m.t < omega)
        .map(|m| (m.t, (omega - m.t) * m.sup_energy_density))
        .collect();
    let mut report = BlowupReport {
        omega_hat: omega,
        fit_residual: fit.residual,
        classification: Classification::Undetermined,
        q_series,
        q_ratio: f64::NAN,
        log_power: f64::NAN,
        q_monotone: false,
        bubble_error: None,
        slope_series: trace.all_monitors().map(|m| (m.t, m.origin_slope)).collect(),
    };
    let samples = report.resampled_q(opts.decades, opts.per_decade);
    if samples.len() >= 3 {
        let (lo, hi) = samples.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), (_, q)| (lo.min(*q), hi.max(*q)));
        report.q_ratio = hi / lo;
        // samples run from the last monitor backwards in time.
        report.q_monotone = samples.windows(2).all(|w| w[0].1 > w[1].1);
        report.log_power = log_power(&samples);
        let diverging = report.q_monotone && (report.q_ratio > opts.ratio_max || report.log_power >= opts.min_log_power);
        report.classification = if diverging {
            Classification::TypeII
        } else if report.q_ratio < opts.ratio_max {
            Classification::TypeI
        } else {
            Classification::Undetermined
        };
    }
    if let (Some(p), Some(snap)) = (bubble, trace.snapshots.last()) {
        if snap.state.origin_slope().abs() >= MIN_BUBBLE_SLOPE {
            report.bubble_error = rescaled_profile_compare(&snap.state, p, BubbleWindow::default()).ok();
        }
    }
    report
}

/// Least-squares slope of `log Q` against `log |log tau|`.
fn log_power(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(tau, q)| *q > 0.0 && tau.ln().abs() > 1.0)
        .map(|(tau, q)| (tau.ln().abs().ln(), q.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let (xm, ym) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_square_root_law() {
        let tau: Vec<f64> = (0..400).map(|k| 10f64.powf(-8.0 * k as f64 / 399.0)).filter(|t| *t < 1.0).collect();
        let t: Vec<f64> = tau.iter().map(|x| 1.0 - x).collect();
        let m: Vec<f64> = tau.iter().map(|x| x.powf(-0.5)).collect();
        let fit = estimate_blowup_time(&t, &m).unwrap();
        assert!((fit.omega - 1.0).abs() < 1e-6);
        assert!(!fit.flagged());
    }

    #[test]
    fn too_little_growth() {
        let t = [0.0, 0.5, 0.9];
        let m = [1.0, 10.0, 100.0];
        assert!(matches!(estimate_blowup_time(&t, &m), Err(BlowupError::InsufficientGrowth { .. })));
    }
}
