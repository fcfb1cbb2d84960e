//! Phase-plane form of the steady equation. With `w = (r Phi')^2` as a
//! function of `Phi`,
//!
//! ```text
//! dw/dPhi = (m-1) sin(2 Phi) - sigma 2 (m-2) sqrt(w)
//! ```
//!
//! where `sigma = +1` on a branch where `Phi` increases with `r` and `-1` where
//! it decreases. Writing `x >= 0` for the distance from the branch start,
//! `dw/dx = S(x) - 2 (m-2) sqrt(w)` with `S(x) = d (m-1) sin(2 Phi)`, `d` the
//! direction. The branch is integrated in three legs: `q = sqrt(w)` as the
//! independent variable while `w` rises, `x` around the maximum of `w`, and
//! `q` again while `w` falls to zero. Both square-root endpoints are regular in
//! the `q` legs.

use std::f64::consts::PI;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::SteadyError;
use crate::interp::hermite_quintic;
use crate::ode::{DormandPrince, Integrator, OdeError, Step};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `Phi` increasing in `r`; starts at the lower end of the interval.
    Ascending,
    /// `Phi` decreasing in `r`; starts at the upper end.
    Descending,
}

impl Branch {
    fn direction(self) -> f64 {
        match self {
            Branch::Ascending => 1.0,
            Branch::Descending => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchOptions {
    /// Relative tolerance of the branch integration.
    pub tol: f64,
    /// Allowed distance between the computed and the requested far endpoint.
    pub mismatch_tol: f64,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self { tol: 1e-11, mismatch_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Leg {
    /// Parameter `q`, value `x`, derivative `dx/dq`.
    Q,
    /// Parameter `x`, value `w`, derivative `dw/dx`.
    X,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    leg: Leg,
    p0: f64,
    p1: f64,
    v0: f64,
    v1: f64,
    d0: f64,
    d1: f64,
    dd0: f64,
    dd1: f64,
}

impl Segment {
    fn eval(&self, p: f64) -> (f64, f64) {
        hermite_quintic(self.p0, self.p1, [self.v0, self.d0, self.dd0], [self.v1, self.d1, self.dd1], p)
    }

    fn x_range(&self) -> (f64, f64) {
        match self.leg {
            Leg::Q => (self.v0.min(self.v1), self.v0.max(self.v1)),
            Leg::X => (self.p0.min(self.p1), self.p0.max(self.p1)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhasePlaneSolution {
    pub m: u32,
    pub branch: Branch,
    /// Requested `(Phi_lo, Phi_hi)`.
    pub phi_interval: (f64, f64),
    /// Where the integration actually returned to `w = 0`.
    pub phi_end: f64,
    pub phi_samples: Vec<f64>,
    pub w_samples: Vec<f64>,
    start: f64,
    /// Origin start: `w = x^2 + c x^4` below `x_series`.
    origin: bool,
    x_series: f64,
    x_end: f64,
    segments: Vec<Segment>,
}

/// Angles this close to a branch end are treated as the end itself.
const END_TOL: f64 = 1e-6;

fn origin_coeff(m: f64) -> f64 {
    -4.0 * (m - 1.0) / (3.0 * (m + 2.0))
}

impl PhasePlaneSolution {
    fn x_of(&self, phi: f64) -> f64 {
        self.branch.direction() * (phi - self.start)
    }

    /// `w(Phi)` on the branch; NaN outside it.
    pub fn w(&self, phi: f64) -> f64 {
        let x = self.x_of(phi);
        if !(x >= 0.0) || x > self.x_end * (1.0 + 1e-14) {
            return f64::NAN;
        }
        if x == 0.0 || x >= self.x_end {
            return 0.0;
        }
        if self.origin && x <= self.x_series {
            return x * x + origin_coeff(self.m as f64) * x.powi(4);
        }
        let i = self.segments.partition_point(|s| s.x_range().1 < x).min(self.segments.len() - 1);
        let seg = &self.segments[i];
        match seg.leg {
            Leg::X => seg.eval(x).0.max(0.0),
            Leg::Q => {
                // x(q) is monotone on the segment; invert by bisection.
                let eval = |q: f64| seg.eval(q).0;
                let (mut a, mut b) = (seg.p0, seg.p1);
                let inc = seg.v1 > seg.v0;
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if (eval(mid) < x) == inc {
                        a = mid;
                    } else {
                        b = mid;
                    }
                    if (b - a).abs() <= 1e-16 * a.abs().max(b.abs()) {
                        break;
                    }
                }
                let q = 0.5 * (a + b);
                q * q
            }
        }
    }

    /// `dw/dPhi` from the ODE.
    pub fn dw(&self, phi: f64) -> f64 {
        let w = self.w(phi);
        let sigma = self.branch.direction();
        (self.m as f64 - 1.0) * (2.0 * phi).sin() - sigma * 2.0 * (self.m as f64 - 2.0) * w.max(0.0).sqrt()
    }

    /// Whether `w` has a double zero at `phi` (the origin, or an angle where
    /// `sin 2 Phi` vanishes).
    fn double_zero_at(&self, phi: f64) -> bool {
        let x = self.x_of(phi);
        if self.origin && x.abs() < 1e-14 {
            return true;
        }
        (2.0 * phi).sin().abs() < 1e-7
    }

    fn at_end(&self, phi: f64) -> bool {
        let x = self.x_of(phi);
        x.abs() <= END_TOL || (x - self.x_end).abs() <= END_TOL
    }
}

fn ode_to_steady(e: OdeError, expected: f64) -> SteadyError {
    match e {
        OdeError::StepUnderflow { .. } | OdeError::NonFinite { .. } | OdeError::StepLimit { .. } => {
            SteadyError::BranchMismatch { expected, found: f64::NAN }
        }
    }
}

/// Integrates `w` across `phi_interval` on the given branch, starting at the
/// lower end for [`Branch::Ascending`] and the upper end for
/// [`Branch::Descending`]. A start at `Phi = 0` is treated as the origin of
/// the profile (`w ~ Phi^2`); any other start must be a simple zero.
pub fn solve_w_branch(
    m: u32,
    branch: Branch,
    phi_interval: (f64, f64),
    opts: BranchOptions,
) -> Result<PhasePlaneSolution, SteadyError> {
    let (lo, hi) = phi_interval;
    if m < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(SteadyError::InvalidInput(format!("m = {m}, interval ({lo}, {hi})")));
    }
    let mf = m as f64;
    let d = branch.direction();
    let (start, target) = match branch {
        Branch::Ascending => (lo, hi),
        Branch::Descending => (hi, lo),
    };
    let origin = start == 0.0;
    let s = move |x: f64| d * (mf - 1.0) * (2.0 * (start + d * x)).sin();
    let s0 = s(0.0);
    if !origin && !(s0 > 0.0) {
        return Err(SteadyError::InvalidInput(format!(
            "branch start {start} is not a simple zero for the {branch:?} branch"
        )));
    }
    let x_span = (target - start).abs();
    let x_cap = x_span + 0.5 * PI;
    let k = 2.0 * (mf - 2.0);
    let mut sol = PhasePlaneSolution {
        m,
        branch,
        phi_interval,
        phi_end: f64::NAN,
        phi_samples: vec![start],
        w_samples: vec![0.0],
        start,
        origin,
        x_series: 0.0,
        x_end: f64::NAN,
        segments: Vec::new(),
    };
    let ode = DormandPrince::new(opts.tol, 1e-300).with_h_max(0.005);
    let mismatch = |found: f64| SteadyError::BranchMismatch { expected: target, found };

    // Leg 1: q rising.
    let (q_start, x_start) = if origin {
        let x0 = 1e-3_f64.min(0.01 * x_span);
        sol.x_series = x0;
        let w0 = x0 * x0 + origin_coeff(mf) * x0.powi(4);
        (w0.sqrt(), x0)
    } else {
        // x = q^2 / s0 + 2 k q^3 / (3 s0^2) + O(q^4) near a simple zero.
        let q0 = 1e-4 * s0.sqrt();
        (q0, q0 * q0 / s0 + 2.0 * k * q0.powi(3) / (3.0 * s0 * s0))
    };
    let rhs_q = move |q: f64, y: &[f64; 1]| [2.0 * q / (s(y[0]) - k * q)];
    let ds = move |x: f64| 2.0 * (mf - 1.0) * (2.0 * (start + d * x)).cos();
    let ddq = move |q: f64, x: f64| {
        let den = s(x) - k * q;
        let xp = 2.0 * q / den;
        2.0 / den - 2.0 * q * (ds(x) * xp - k) / (den * den)
    };
    let ddx = move |x: f64, w: f64| {
        let wp = s(x) - k * w.max(0.0).sqrt();
        if w > 0.0 { ds(x) - k * wp / (2.0 * w.sqrt()) } else { ds(x) }
    };
    let q_seg = move |st: &Step<1>| Segment {
        leg: Leg::Q, p0: st.t0, p1: st.t1, v0: st.y0[0], v1: st.y1[0], d0: st.f0[0], d1: st.f1[0],
        dd0: ddq(st.t0, st.y0[0]), dd1: ddq(st.t1, st.y1[0]),
    };
    let x_seg = move |st: &Step<1>| Segment {
        leg: Leg::X, p0: st.t0, p1: st.t1, v0: st.y0[0], v1: st.y1[0], d0: st.f0[0], d1: st.f1[0],
        dd0: ddx(st.t0, st.y0[0]), dd1: ddx(st.t1, st.y1[0]),
    };
    let mut d_max = s(x_start) - k * q_start;
    if !origin {
        let d1 = rhs_q(q_start, &[x_start])[0];
        let (dd0, dd1) = (2.0 / s0, ddq(q_start, x_start));
        sol.segments.push(Segment { leg: Leg::Q, p0: 0.0, p1: q_start, v0: 0.0, v1: x_start, d0: 0.0, d1, dd0, dd1 });
    }
    let mut leg_end = None;
    {
        let segs = &mut sol.segments;
        let phis = &mut sol.phi_samples;
        let ws = &mut sol.w_samples;
        ode.integrate(&rhs_q, q_start, [x_start], 2.0, |st: &Step<1>| {
            let den = s(st.y1[0]) - k * st.t1;
            segs.push(q_seg(st));
            phis.push(start + d * st.y1[0]);
            ws.push(st.t1 * st.t1);
            d_max = d_max.max(den);
            if den < 0.7 * d_max || st.y1[0] > x_cap {
                leg_end = Some((st.t1, st.y1[0]));
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        })
        .map_err(|e| ode_to_steady(e, target))?;
    }
    let (q1, x1) = leg_end.ok_or_else(|| mismatch(f64::NAN))?;
    if x1 > x_cap {
        return Err(mismatch(start + d * x1));
    }

    // Leg 2: x across the maximum of w. When the far end is a double zero
    // (sin 2 Phi = 0 there), the q form is unstable near it and this leg runs
    // to the end instead.
    let double_end = (2.0 * target).sin().abs() < 1e-6;
    let rhs_x = move |x: f64, y: &[f64; 1]| [s(x) - k * y[0].max(0.0).sqrt()];
    let mut w_max = q1 * q1;
    let mut leg_end = None;
    let mut was_falling = false;
    {
        let segs = &mut sol.segments;
        let phis = &mut sol.phi_samples;
        let ws = &mut sol.w_samples;
        ode.integrate(&rhs_x, x1, [q1 * q1], x_cap, |st: &Step<1>| {
            segs.push(x_seg(st));
            phis.push(start + d * st.t1);
            ws.push(st.y1[0].max(0.0));
            w_max = w_max.max(st.y1[0]);
            let falling = st.f1[0] < 0.0;
            let stop = if double_end {
                let turned = was_falling && !falling;
                st.y1[0] <= 0.0 || turned
            } else {
                falling && (st.y1[0] <= 0.25 * w_max || st.f1[0] < -0.3 * d_max)
            };
            was_falling |= falling;
            if stop {
                leg_end = Some((st.t1, st.y1[0]));
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        })
        .map_err(|e| ode_to_steady(e, target))?;
    }
    let (x2, w2) = leg_end.ok_or_else(|| mismatch(start + d * x_cap))?;

    if double_end {
        let seg = *sol.segments.last().unwrap();
        let (x_end, w_end) = touchdown(&seg);
        if w_end > 1e-8 * w_max {
            return Err(mismatch(start + d * x_end));
        }
        sol.x_end = x_end;
        if let Some(last) = sol.segments.last_mut() {
            last.p1 = x_end;
            last.v1 = 0.0;
            last.d1 = 0.0;
        }
        *sol.phi_samples.last_mut().unwrap() = start + d * x_end;
    } else {
        if !(w2 > 0.0) {
            return Err(mismatch(start + d * x2));
        }
        // Leg 3: q falling to zero.
        let mut closed = true;
        let segs = &mut sol.segments;
        let phis = &mut sol.phi_samples;
        let ws = &mut sol.w_samples;
        let q_stop = 1e-7 * w_max.sqrt();
        let summary = ode
            .integrate(&rhs_q, w2.sqrt(), [x2], q_stop, |st: &Step<1>| {
                segs.push(q_seg(st));
                phis.push(start + d * st.y1[0]);
                ws.push(st.t1 * st.t1);
                if s(st.y1[0]) - k * st.t1 >= 0.0 || st.y1[0] > x_cap {
                    closed = false;
                    return ControlFlow::Break(());
                }
                ControlFlow::Continue(())
            })
            .map_err(|e| ode_to_steady(e, target))?;
        if !closed {
            return Err(mismatch(start + d * summary.y[0]));
        }
        // Below q_stop, x is linear in q up to O(q^2).
        let slope = rhs_q(q_stop, &summary.y)[0];
        sol.x_end = summary.y[0] - q_stop * slope;
        let dd = ddq(q_stop, summary.y[0]);
        segs.push(Segment { leg: Leg::Q, p0: q_stop, p1: 0.0, v0: summary.y[0], v1: sol.x_end, d0: slope, d1: slope, dd0: dd, dd1: dd });
        phis.push(start + d * sol.x_end);
        ws.push(0.0);
    }
    sol.phi_end = start + d * sol.x_end;
    if let Some(w) = sol.w_samples.last_mut() {
        *w = 0.0;
    }
    if (sol.phi_end - target).abs() > opts.mismatch_tol {
        return Err(mismatch(sol.phi_end));
    }
    Ok(sol)
}

/// Where the cubic interpolant of `w` on the last step reaches zero, or its
/// minimum if it only touches down. Returns the point and the value there.
fn touchdown(seg: &Segment) -> (f64, f64) {
    let w = |x: f64| seg.eval(x);
    let (mut a, mut b) = (seg.p0, seg.p1);
    let crosses = seg.v1 <= 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let (v, dv) = w(mid);
        let go_right = if crosses { v > 0.0 } else { dv < 0.0 };
        if go_right {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-16 * b.abs() {
            break;
        }
    }
    let x = 0.5 * (a + b);
    (x, w(x).0.max(0.0))
}

/// `r` on the branch where `Phi(r) = phi`, given one point `(phi0, r0)` on it:
/// `log r - log r0 = d * int_{phi0}^{phi} dtau / sqrt(w(tau))`, with `d = +1`
/// on ascending and `-1` on descending branches.
///
/// The integral is taken after the substitution
/// `tau = a + (b - a)(1 - cos(pi v)) / 2`, which cancels the inverse square
/// root at a simple zero of `w`. At a double zero it diverges.
pub fn radius_from_w(sol: &PhasePlaneSolution, phi0: f64, r0: f64, phi: f64) -> Result<f64, SteadyError> {
    if !(r0 > 0.0) {
        return Err(SteadyError::InvalidInput(format!("r0 = {r0}")));
    }
    let inside = |p: f64| {
        let x = sol.x_of(p);
        x >= -END_TOL && x <= sol.x_end + END_TOL
    };
    if !inside(phi0) || !inside(phi) {
        return Err(SteadyError::InvalidInput(format!("angles {phi0}, {phi} outside the branch")));
    }
    if phi == phi0 {
        return Ok(r0);
    }
    for p in [phi0, phi] {
        if sol.at_end(p) && sol.double_zero_at(p) {
            return Err(SteadyError::QuadratureDivergence { phi: p });
        }
    }
    let clamp = |p: f64| sol.start + sol.branch.direction() * sol.x_of(p).clamp(0.0, sol.x_end);
    let (p0, p1) = (clamp(phi0), clamp(phi));
    let (a, b) = (p0.min(p1), p0.max(p1));
    let half = 0.5 * (b - a);
    // Distance from each limit to the nearest end of the branch, in angle.
    let to_end = |p: f64| {
        let x = sol.x_of(p).clamp(0.0, sol.x_end);
        let (dist, end_x) = if x < sol.x_end - x { (x, 0.0) } else { (sol.x_end - x, sol.x_end) };
        (dist, sol.start + sol.branch.direction() * end_x)
    };
    let (a_gap, a_end) = to_end(a);
    let (b_gap, b_end) = to_end(b);
    let integrand = |v: f64| {
        // Distances from either limit, free of cancellation.
        let from_a = 2.0 * half * (0.5 * PI * v).sin().powi(2);
        let from_b = 2.0 * half * (0.5 * PI * (1.0 - v)).sin().powi(2);
        let jac = half * PI * (PI * v).sin();
        if jac == 0.0 {
            return 0.0;
        }
        let (tau, gap, end) = if v < 0.5 { (a + from_a, a_gap + from_a, a_end) } else { (b - from_b, b_gap + from_b, b_end) };
        let slope = ((sol.m as f64 - 1.0) * (2.0 * end).sin()).abs();
        let w = if gap < 1e-9 && slope > 1e-3 {
            // Simple-zero model: rounding in tau dominates this close to the end.
            slope * gap
        } else {
            sol.w(tau)
        };
        jac / w.max(1e-300).sqrt()
    };
    let integral = match quad::integrate(integrand, 0.0, 1.0, 1e-13, 1e-11) {
        Ok(v) => v,
        Err(quad::QuadError::Limit { value, err }) if err <= 1e-8 * value.abs() => value,
        Err(_) => return Err(SteadyError::QuadratureDivergence { phi }),
    };
    let oriented = if phi > phi0 { integral } else { -integral };
    Ok(r0 * (sol.branch.direction() * oriented).exp())
}
