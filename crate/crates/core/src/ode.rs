//! Adaptive explicit Runge-Kutta integrators for small autonomous or
//! non-autonomous systems `y' = f(t, y)` with `y` in `R^N`.
//!
//! Two integrators with different order and step controller are provided so
//! that one can serve as an independent check on the other:
//!
//! * [`DormandPrince`]: the 5(4) embedded pair with a PI step controller.
//! * [`Rk4Doubling`]: classical RK4 with step-doubling (Richardson) error
//!   estimation and a plain integral controller.
//!
//! The error norm is `|err|_2 / (atol + rtol * max(|y0|_2, |y1|_2))`, i.e. it is
//! relative to the size of the whole state vector rather than componentwise.
//! That keeps relative accuracy for oscillatory states whose components cross
//! zero one at a time but whose norm does not.

use std::ops::ControlFlow;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step limit of {limit} reached at t = {t}")]
    StepLimit { limit: usize, t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

/// Right-hand side of a first order system.
pub trait Rhs<const N: usize> {
    fn eval(&self, t: f64, y: &[f64; N]) -> [f64; N];
}

impl<F, const N: usize> Rhs<N> for F
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    fn eval(&self, t: f64, y: &[f64; N]) -> [f64; N] {
        self(t, y)
    }
}

/// One accepted step, handed to the observer.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub y0: [f64; N],
    pub f0: [f64; N],
    pub t1: f64,
    pub y1: [f64; N],
    pub f1: [f64; N],
}

#[derive(Debug, Clone, Copy)]
pub struct Summary<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
    /// True when the observer stopped the integration before `t_end`.
    pub interrupted: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol }
    }
}

pub trait Integrator<const N: usize> {
    /// Integrate from `t0` to `t_end` (either direction). The observer sees
    /// every accepted step and may stop the integration early.
    fn integrate<F, O>(
        &self,
        f: &F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        observer: O,
    ) -> Result<Summary<N>, OdeError>
    where
        F: Rhs<N>,
        O: FnMut(&Step<N>) -> ControlFlow<()>;
}

fn norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Dormand-Prince 5(4) with a PI controller (Hairer-Norsett-Wanner defaults).
#[derive(Debug, Clone, Copy)]
pub struct DormandPrince {
    pub tol: Tolerance,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl DormandPrince {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            tol: Tolerance::new(rtol, atol),
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }
}

const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A21: f64 = 1.0 / 5.0;
const DP_A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const DP_A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const DP_A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const DP_A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const DP_B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// b - b_hat, including the FSAL stage.
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn initial_step<F: Rhs<N>, const N: usize>(
    f: &F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    tol: Tolerance,
    order: i32,
) -> f64 {
    let sc = tol.atol + tol.rtol * norm(y0);
    let d0 = norm(y0) / sc;
    let d1 = norm(f0) / sc;
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = axpy(y0, dir * h0, &[(1.0, f0)]);
    let f1 = f.eval(t0 + dir * h0, &y1);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = norm(&diff) / sc / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / (order as f64 + 1.0))
    };
    (100.0 * h0).min(h1)
}

impl<const N: usize> Integrator<N> for DormandPrince {
    fn integrate<F, O>(
        &self,
        f: &F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        mut observer: O,
    ) -> Result<Summary<N>, OdeError>
    where
        F: Rhs<N>,
        O: FnMut(&Step<N>) -> ControlFlow<()>,
    {
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let span = (t_end - t0).abs();
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f.eval(t, &y);
        let mut h = self
            .h_init
            .unwrap_or_else(|| initial_step(f, t0, &y0, &k1, dir, self.tol, 5))
            .min(self.h_max)
            .min(span.max(f64::MIN_POSITIVE));
        let mut err_prev: f64 = 1e-4;
        let mut accepted = 0;
        let mut rejected = 0;
        let mut last_rejected = false;

        while (t_end - t) * dir > 0.0 {
            if accepted + rejected >= self.max_steps {
                return Err(OdeError::StepLimit { limit: self.max_steps, t });
            }
            let remaining = (t_end - t).abs();
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(OdeError::StepUnderflow { t, h });
            }
            let hs = dir * h;
            let k2 = f.eval(t + DP_C[1] * hs, &axpy(&y, hs, &[(DP_A21, &k1)]));
            let k3 = f.eval(
                t + DP_C[2] * hs,
                &axpy(&y, hs, &[(DP_A3[0], &k1), (DP_A3[1], &k2)]),
            );
            let k4 = f.eval(
                t + DP_C[3] * hs,
                &axpy(&y, hs, &[(DP_A4[0], &k1), (DP_A4[1], &k2), (DP_A4[2], &k3)]),
            );
            let k5 = f.eval(
                t + DP_C[4] * hs,
                &axpy(
                    &y,
                    hs,
                    &[
                        (DP_A5[0], &k1),
                        (DP_A5[1], &k2),
                        (DP_A5[2], &k3),
                        (DP_A5[3], &k4),
                    ],
                ),
            );
            let k6 = f.eval(
                t + DP_C[5] * hs,
                &axpy(
                    &y,
                    hs,
                    &[
                        (DP_A6[0], &k1),
                        (DP_A6[1], &k2),
                        (DP_A6[2], &k3),
                        (DP_A6[3], &k4),
                        (DP_A6[4], &k5),
                    ],
                ),
            );
            let y_new = axpy(
                &y,
                hs,
                &[
                    (DP_B[0], &k1),
                    (DP_B[2], &k3),
                    (DP_B[3], &k4),
                    (DP_B[4], &k5),
                    (DP_B[5], &k6),
                ],
            );
            let t_new = if last { t_end } else { t + hs };
            let k7 = f.eval(t_new, &y_new);
            let mut e = [0.0; N];
            for i in 0..N {
                e[i] = hs
                    * (DP_E[0] * k1[i]
                        + DP_E[2] * k3[i]
                        + DP_E[3] * k4[i]
                        + DP_E[4] * k5[i]
                        + DP_E[5] * k6[i]
                        + DP_E[6] * k7[i]);
            }
            let sc = self.tol.atol + self.tol.rtol * norm(&y).max(norm(&y_new));
            let err = norm(&e) / sc;
            if !err.is_finite() || !all_finite(&y_new) {
                rejected += 1;
                h *= 0.25;
                last_rejected = true;
                continue;
            }
            if err <= 1.0 {
                let step = Step { t0: t, y0: y, f0: k1, t1: t_new, y1: y_new, f1: k7 };
                t = t_new;
                y = y_new;
                k1 = k7;
                accepted += 1;
                let mut fac = 0.9 * err.max(1e-10).powf(-0.17) * err_prev.powf(0.04);
                fac = fac.clamp(0.2, 10.0);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                err_prev = err.max(1e-4);
                h = (h * fac).min(self.h_max);
                last_rejected = false;
                if observer(&step).is_break() {
                    return Ok(Summary { t, y, accepted, rejected, interrupted: true });
                }
            } else {
                rejected += 1;
                let fac = (0.9 * err.powf(-0.2)).max(0.2);
                h *= fac;
                last_rejected = true;
            }
        }
        Ok(Summary { t, y, accepted, rejected, interrupted: false })
    }
}

/// Classical RK4 with step doubling. The accepted value is the two-half-step
/// solution plus the Richardson correction, so the method is locally fifth
/// order while the controller assumes the fourth order error of RK4.
#[derive(Debug, Clone, Copy)]
pub struct Rk4Doubling {
    pub tol: Tolerance,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Rk4Doubling {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { tol: Tolerance::new(rtol, atol), h_max: f64::INFINITY, max_steps: 4_000_000 }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }
}

fn rk4_step<F: Rhs<N>, const N: usize>(f: &F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> [f64; N] {
    let k2 = f.eval(t + 0.5 * h, &axpy(y, h, &[(0.5, k1)]));
    let k3 = f.eval(t + 0.5 * h, &axpy(y, h, &[(0.5, &k2)]));
    let k4 = f.eval(t + h, &axpy(y, h, &[(1.0, &k3)]));
    axpy(y, h, &[(1.0 / 6.0, k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)])
}

impl<const N: usize> Integrator<N> for Rk4Doubling {
    fn integrate<F, O>(
        &self,
        f: &F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        mut observer: O,
    ) -> Result<Summary<N>, OdeError>
    where
        F: Rhs<N>,
        O: FnMut(&Step<N>) -> ControlFlow<()>,
    {
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let span = (t_end - t0).abs();
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f.eval(t, &y);
        let mut h = initial_step(f, t0, &y0, &k1, dir, self.tol, 4)
            .min(self.h_max)
            .min(span.max(f64::MIN_POSITIVE));
        let mut accepted = 0;
        let mut rejected = 0;

        while (t_end - t) * dir > 0.0 {
            if accepted + rejected >= self.max_steps {
                return Err(OdeError::StepLimit { limit: self.max_steps, t });
            }
            let remaining = (t_end - t).abs();
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(OdeError::StepUnderflow { t, h });
            }
            let hs = dir * h;
            let big = rk4_step(f, t, &y, &k1, hs);
            let half = rk4_step(f, t, &y, &k1, 0.5 * hs);
            let kh = f.eval(t + 0.5 * hs, &half);
            let small = rk4_step(f, t + 0.5 * hs, &half, &kh, 0.5 * hs);
            let mut diff = [0.0; N];
            let mut y_new = small;
            for i in 0..N {
                diff[i] = (small[i] - big[i]) / 15.0;
                y_new[i] += diff[i];
            }
            let sc = self.tol.atol + self.tol.rtol * norm(&y).max(norm(&y_new));
            let err = norm(&diff) / sc;
            if !err.is_finite() || !all_finite(&y_new) {
                rejected += 1;
                h *= 0.25;
                continue;
            }
            if err <= 1.0 {
                let t_new = if last { t_end } else { t + hs };
                let f1 = f.eval(t_new, &y_new);
                let step = Step { t0: t, y0: y, f0: k1, t1: t_new, y1: y_new, f1 };
                t = t_new;
                y = y_new;
                k1 = f1;
                accepted += 1;
                h = (h * (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 4.0)).min(self.h_max);
                if observer(&step).is_break() {
                    return Ok(Summary { t, y, accepted, rejected, interrupted: true });
                }
            } else {
                rejected += 1;
                h *= (0.9 * err.powf(-0.25)).max(0.2);
            }
        }
        Ok(Summary { t, y, accepted, rejected, interrupted: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    #[test]
    fn dopri_harmonic_oscillator() {
        let s = DormandPrince::new(1e-11, 1e-14)
            .integrate(&oscillator, 0.0, [0.0, 1.0], 10.0, |_| ControlFlow::Continue(()))
            .unwrap();
        assert!((s.y[0] - 10f64.sin()).abs() < 1e-9);
        assert!((s.y[1] - 10f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn rk4_doubling_harmonic_oscillator() {
        let s = Rk4Doubling::new(1e-11, 1e-14)
            .integrate(&oscillator, 0.0, [0.0, 1.0], 10.0, |_| ControlFlow::Continue(()))
            .unwrap();
        assert!((s.y[0] - 10f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn backwards_integration() {
        let decay = |_t: f64, y: &[f64; 1]| [-y[0]];
        let s = DormandPrince::new(1e-12, 1e-14)
            .integrate(&decay, 1.0, [1.0], 0.0, |_| ControlFlow::Continue(()))
            .unwrap();
        assert!((s.y[0] - 1f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn observer_can_stop() {
        let s = DormandPrince::new(1e-8, 1e-12)
            .integrate(&oscillator, 0.0, [0.0, 1.0], 10.0, |st| {
                if st.y1[1] < 0.0 {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            })
            .unwrap();
        assert!(s.interrupted);
        assert!(s.t > std::f64::consts::FRAC_PI_2 && s.t < 4.0);
    }
}
