use serde::{Deserialize, Serialize};

use crate::interp::Spline;
use crate::model::sphere_area;
use crate::quad::kronrod15;

use super::frame::gaussian_cut;
use super::{SelfSimError, SelfSimFrame};

/// Smooth cutoff `phi(x)`: 1 on `[0, delta/2]`, 0 beyond `delta`, joined by
/// the quintic smoothstep, so `phi` is `C^2` with `|phi''| <= 60 / delta^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub delta: f64,
}

impl Cutoff {
    pub fn eval(&self, x: f64) -> f64 {
        let half = 0.5 * self.delta;
        if x <= half {
            1.0
        } else if x >= self.delta {
            0.0
        } else {
            let u = (x - half) / half;
            1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
        }
    }
}

/// Gaussian weight `rho(y) = exp(-y^2 / 4)`.
fn rho(y: f64) -> f64 {
    (-0.25 * y * y).exp()
}

/// `|S^{m-1}| int rho(y) phi^2(e^{-s/2} y) f(y, w, w_y) y^{m-1} dy` over the
/// frame, by the 15-point Kronrod rule on every cell of the frame grid.
/// Without a cutoff, `phi = 1`.
pub fn weighted_integral(
    frame: &SelfSimFrame,
    cutoff: Option<Cutoff>,
    f: impl Fn(f64, f64, f64) -> f64,
) -> f64 {
    let interp = frame.interpolant();
    weighted_integral_with(frame, &interp, cutoff, f)
}

fn weighted_integral_with(
    frame: &SelfSimFrame,
    interp: &Spline,
    cutoff: Option<Cutoff>,
    f: impl Fn(f64, f64, f64) -> f64,
) -> f64 {
    let scale = (0.5 * frame.s).exp();
    let mut top = gaussian_cut().min(*frame.y.last().unwrap());
    if let Some(c) = cutoff {
        top = top.min(c.delta * scale);
    }
    let p = frame.m as i32 - 1;
    let integrand = |y: f64| {
        let (w, wy) = interp.eval_with_derivative(y);
        let phi = cutoff.map_or(1.0, |c| c.eval(y / scale));
        rho(y) * phi * phi * f(y, w, wy) * y.powi(p)
    };
    let mut total = 0.0;
    for win in frame.y.windows(2) {
        if win[0] >= top {
            break;
        }
        total += kronrod15(integrand, win[0], win[1].min(top));
    }
    sphere_area(frame.m) * total
}

fn density(m: u32) -> impl Fn(f64, f64, f64) -> f64 {
    let k = m as f64 - 1.0;
    move |y, w, wy| {
        let s = w.sin() / y;
        wy * wy + k * s * s
    }
}

/// `(E(w), E~(w))`: half the Gaussian-weighted energy of the frame inside the
/// cutoff, without and with the extra `|y|^2` weight.
pub fn local_energies(frame: &SelfSimFrame, cutoff: Cutoff) -> (f64, f64) {
    let interp = frame.interpolant();
    let e = density(frame.m);
    let plain = 0.5 * weighted_integral_with(frame, &interp, Some(cutoff), &e);
    let weighted = 0.5 * weighted_integral_with(frame, &interp, Some(cutoff), |y, w, wy| y * y * e(y, w, wy));
    (plain, weighted)
}

/// Local energies along a sequence of frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub m: u32,
    pub cutoff: Cutoff,
    /// Energy of the initial data, `E(u_0)`.
    pub initial_energy: f64,
    pub s: Vec<f64>,
    pub e_w: Vec<f64>,
    pub etilde_w: Vec<f64>,
    /// `Delta s * int rho w_s^2 phi^2 dV` for consecutive frames, with `w_s`
    /// the difference quotient and `phi` at the mean of the two `s`.
    pub dissipation: Vec<f64>,
}

impl EnergyTrace {
    pub fn dissipation_sum(&self) -> f64 {
        self.dissipation.iter().sum()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "e_w", "etilde_w", "dissipation"])?;
        for i in 0..self.s.len() {
            let d = if i == 0 { String::new() } else { format!("{:e}", self.dissipation[i - 1]) };
            w.write_record([format!("{:e}", self.s[i]), format!("{:e}", self.e_w[i]), format!("{:e}", self.etilde_w[i]), d])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn energy_trace(frames: &[SelfSimFrame], cutoff: Cutoff, initial_energy: f64) -> EnergyTrace {
    let m = frames.first().map_or(2, |f| f.m);
    let (mut e_w, mut etilde_w) = (Vec::new(), Vec::new());
    for f in frames {
        let (e, et) = local_energies(f, cutoff);
        e_w.push(e);
        etilde_w.push(et);
    }
    let dissipation = frames
        .windows(2)
        .map(|pair| {
            let (a, b) = (&pair[0], &pair[1]);
            let ds = b.s - a.s;
            let n = a.y.len().min(b.y.len());
            let ws: Vec<f64> = (0..n).map(|i| (b.w[i] - a.w[i]) / ds).collect();
            let mid = SelfSimFrame { s: 0.5 * (a.s + b.s), y: a.y[..n].to_vec(), w: ws, ..a.clone() };
            // Interpolate w_s linearly between nodes so oscillations of the
            // cubic do not bias the square.
            let (y, v) = (&mid.y, &mid.w);
            let lin = |x: f64| {
                let i = crate::interp::locate(y, x);
                let t = (x - y[i]) / (y[i + 1] - y[i]);
                v[i] + t * (v[i + 1] - v[i])
            };
            ds * weighted_integral(&mid, Some(cutoff), |yy, _, _| {
                let q = lin(yy);
                q * q
            })
        })
        .collect();
    EnergyTrace { m, cutoff, initial_energy, s: frames.iter().map(|f| f.s).collect(), e_w, etilde_w, dissipation }
}

/// Pairwise check of `E(s) <= (1 + 1/kappa) E(s') + C e^{-kappa s'} E(u_0)`
/// and of the same inequality for `E~ + lambda E` (remainder `C e^{-kappa s}
/// E(u_0)`), with `C` fitted as the smallest constant that makes every
/// defect vanish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub kappa: f64,
    pub lambda: f64,
    pub pairs: usize,
    /// Fitted constant for `E`.
    pub c_energy: f64,
    /// Largest defect with `C = 0`.
    pub worst_defect_energy: f64,
    pub c_combined: f64,
    pub worst_defect_combined: f64,
    /// `dissipation_sum / E(u_0)`: the smallest constant bounding the
    /// discrete dissipation integral.
    pub c_dissipation: f64,
    pub dissipation_sum: f64,
    pub initial_energy: f64,
    /// The monotonicity statements are proved for surfaces; other `m` are
    /// reported as an experiment.
    pub note: Option<String>,
}

impl MonotonicityReport {
    /// Largest defect of the `E` inequality with constant `c`.
    pub fn defect_energy(&self, etrace: &EnergyTrace, c: f64) -> f64 {
        let k = 1.0 + 1.0 / self.kappa;
        pairwise(etrace, &etrace.e_w, |sp, _| c * (-self.kappa * sp).exp() * etrace.initial_energy, k)
    }
}

fn pairwise(etrace: &EnergyTrace, v: &[f64], rem: impl Fn(f64, f64) -> f64, k: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..v.len() {
        for i in 0..j {
            if etrace.s[i] < etrace.s[j] {
                worst = worst.max(v[j] - k * v[i] - rem(etrace.s[i], etrace.s[j]));
            }
        }
    }
    worst
}

fn fit(etrace: &EnergyTrace, v: &[f64], k: f64, weight: impl Fn(f64, f64) -> f64) -> f64 {
    let mut c: f64 = 0.0;
    for j in 0..v.len() {
        for i in 0..j {
            if etrace.s[i] < etrace.s[j] {
                let excess = v[j] - k * v[i];
                if excess > 0.0 {
                    c = c.max(excess / (weight(etrace.s[i], etrace.s[j]) * etrace.initial_energy));
                }
            }
        }
    }
    c
}

pub fn monotonicity_report(etrace: &EnergyTrace, kappa: f64, lambda: f64) -> Result<MonotonicityReport, SelfSimError> {
    if !(lambda > 8.0) {
        return Err(SelfSimError::ParameterOutOfRange(format!("lambda must exceed 8, got {lambda}")));
    }
    if !(kappa > 1.0) {
        return Err(SelfSimError::ParameterOutOfRange(format!("kappa must exceed 1, got {kappa}")));
    }
    let k = 1.0 + 1.0 / kappa;
    let combined: Vec<f64> = etrace.etilde_w.iter().zip(&etrace.e_w).map(|(t, e)| t + lambda * e).collect();
    let n = etrace.s.len();
    let dissipation_sum = etrace.dissipation_sum();
    Ok(MonotonicityReport {
        kappa,
        lambda,
        pairs: n * n.saturating_sub(1) / 2,
        c_energy: fit(etrace, &etrace.e_w, k, |sp, _| (-kappa * sp).exp()),
        worst_defect_energy: pairwise(etrace, &etrace.e_w, |_, _| 0.0, k),
        c_combined: fit(etrace, &combined, k, |_, s| (-kappa * s).exp()),
        worst_defect_combined: pairwise(etrace, &combined, |_, _| 0.0, k),
        c_dissipation: dissipation_sum / etrace.initial_energy,
        dissipation_sum,
        initial_energy: etrace.initial_energy,
        note: (etrace.m != 2).then(|| format!("m = {}: the monotonicity formulas are proved for m = 2", etrace.m)),
    })
}
