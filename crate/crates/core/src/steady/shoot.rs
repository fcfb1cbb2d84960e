use std::f64::consts::FRAC_PI_2;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::SteadyError;
use crate::diagnostics::zero_number;
use crate::interp::hermite_quintic;
use crate::ode::{DormandPrince, Integrator, Rk4Doubling, Step};

/// Relative zero tolerance used when counting crossings of a steady profile.
/// Profiles are integrated with relative accuracy around `pi/2`, so far
/// smaller oscillations than along a flow trace are still meaningful.
pub const PROFILE_ZERO_TOL: f64 = 1e-30;

/// Integrator used for shooting. `Rk4Doubling` exists as an independent
/// check of the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Shooter {
    #[default]
    DormandPrince,
    Rk4Doubling,
}

/// A critical point `(r_k, omega_k)` of the profile. `psi = omega - pi/2` is
/// stored separately because late extrema sit within rounding of `pi/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub r: f64,
    pub omega: f64,
    pub psi: f64,
}

/// Dense output node in `s = log r`. The angle is `offset + u`, with the
/// offset switched from 0 to pi/2 once the profile leaves the origin so that
/// the oscillation about pi/2 keeps full relative precision.
#[derive(Debug, Clone, Copy)]
struct Knot {
    s: f64,
    offset: f64,
    u: [f64; 4],
}

#[derive(Debug, Clone)]
pub struct SteadyProfile {
    pub m: u32,
    pub a: f64,
    pub r_max: f64,
    pub tol: f64,
    pub shooter: Shooter,
    /// Start of the integration; the origin series is used below it.
    pub r_start: f64,
    pub extrema: Vec<Extremum>,
    sign: f64,
    knots: Vec<Knot>,
}

fn series_coeff(m: f64) -> f64 {
    -(m - 1.0) / (3.0 * (m + 2.0))
}

/// `sin(2 Phi)` and `cos(2 Phi)` for `Phi = offset + u` with offset 0 or pi/2.
fn trig2(offset: f64, u: f64) -> (f64, f64) {
    let (s, c) = (2.0 * u).sin_cos();
    if offset == 0.0 {
        (s, c)
    } else {
        (-s, -c)
    }
}

fn derivatives(m: f64, offset: f64, u: f64, v: f64) -> [f64; 4] {
    let (s2, c2) = trig2(offset, u);
    let vs = -(m - 2.0) * v + 0.5 * (m - 1.0) * s2;
    let vss = -(m - 2.0) * vs + (m - 1.0) * c2 * v;
    [u, v, vs, vss]
}

impl SteadyProfile {
    fn trivial(m: u32, r_max: f64, tol: f64, shooter: Shooter) -> Self {
        Self {
            m,
            a: 0.0,
            r_max,
            tol,
            shooter,
            r_start: r_max,
            extrema: Vec::new(),
            sign: 1.0,
            knots: Vec::new(),
        }
    }

    fn series(&self, r: f64) -> [f64; 3] {
        let a = self.a.abs();
        let c = series_coeff(self.m as f64) * a.powi(3);
        [a * r + c * r.powi(3), a + 3.0 * c * r * r, 6.0 * c * r]
    }

    fn knot_span(&self, s: f64) -> Option<usize> {
        let n = self.knots.len();
        if n < 2 || s < self.knots[0].s || s > self.knots[n - 1].s * (1.0 + 1e-15) + 1e-15 {
            return None;
        }
        let i = self.knots.partition_point(|k| k.s <= s);
        Some(i.saturating_sub(1).min(n - 2))
    }

    /// `(offset, u, u_s)` at `s`, relative to the offset of the left knot.
    fn eval_s(&self, s: f64) -> Option<(f64, f64, f64)> {
        let i = self.knot_span(s)?;
        let (k0, k1) = (&self.knots[i], &self.knots[i + 1]);
        let shift = k1.offset - k0.offset;
        let p0 = [k0.u[0], k0.u[1], k0.u[2]];
        let p1 = [k1.u[0] + shift, k1.u[1], k1.u[2]];
        let (u, _) = hermite_quintic(k0.s, k1.s, p0, p1, s);
        let q0 = [k0.u[1], k0.u[2], k0.u[3]];
        let q1 = [k1.u[1], k1.u[2], k1.u[3]];
        let (v, vs) = hermite_quintic(k0.s, k1.s, q0, q1, s);
        let _ = vs;
        Some((k0.offset, u, v))
    }

    /// `Phi_a(r)`; NaN beyond the integration horizon.
    pub fn phi(&self, r: f64) -> f64 {
        self.eval(r).map(|v| v[0]).unwrap_or(f64::NAN)
    }

    /// `Phi_a'(r)`; NaN beyond the horizon.
    pub fn dphi(&self, r: f64) -> f64 {
        self.eval(r).map(|v| v[1]).unwrap_or(f64::NAN)
    }

    /// `Phi_a(r) - pi/2` without cancellation.
    pub fn psi(&self, r: f64) -> f64 {
        if self.a == 0.0 || r < self.r_start {
            return self.phi(r) - FRAC_PI_2 * self.sign;
        }
        match self.eval_s(r.ln()) {
            Some((offset, u, _)) => self.sign * ((offset - FRAC_PI_2) + u),
            None => f64::NAN,
        }
    }

    /// `[Phi, Phi', Phi'']` at `r`, or `None` beyond the horizon.
    pub fn eval(&self, r: f64) -> Option<[f64; 3]> {
        if r < 0.0 || r > self.r_max * (1.0 + 1e-12) {
            return None;
        }
        if self.a == 0.0 {
            return Some([0.0; 3]);
        }
        if r < self.r_start {
            let v = self.series(r);
            return Some([self.sign * v[0], self.sign * v[1], self.sign * v[2]]);
        }
        let s = r.ln();
        let i = self.knot_span(s)?;
        let (k0, k1) = (&self.knots[i], &self.knots[i + 1]);
        let shift = k1.offset - k0.offset;
        let (u, _) = hermite_quintic(k0.s, k1.s, [k0.u[0], k0.u[1], k0.u[2]], [k1.u[0] + shift, k1.u[1], k1.u[2]], s);
        let (v, vs) = hermite_quintic(k0.s, k1.s, [k0.u[1], k0.u[2], k0.u[3]], [k1.u[1], k1.u[2], k1.u[3]], s);
        let phi = k0.offset + u;
        Some([self.sign * phi, self.sign * v / r, self.sign * (vs - v) / (r * r)])
    }

    /// Radii and angles at the integrator's accepted steps (plus the origin).
    pub fn samples(&self) -> (Vec<f64>, Vec<f64>) {
        let mut r = vec![0.0];
        let mut phi = vec![0.0];
        for k in &self.knots {
            r.push(k.s.exp());
            phi.push(self.sign * (k.offset + k.u[0]));
        }
        (r, phi)
    }

    /// Sampled `Phi - level` at the knots inside `[r_lo, r_hi]`, with the
    /// window ends included. Computed relative to pi/2 when possible.
    fn deviation_samples(&self, level: f64, r_lo: f64, r_hi: f64) -> Vec<f64> {
        let base = FRAC_PI_2 * self.sign - level;
        let mut out = Vec::new();
        let mut push = |r: f64| {
            let v = if r == 0.0 { -level } else { self.psi(r) + base };
            if v.is_finite() {
                out.push(v);
            }
        };
        push(r_lo);
        for k in &self.knots {
            let r = k.s.exp();
            if r > r_lo && r < r_hi {
                push(r);
            }
        }
        push(r_hi);
        out
    }

    /// Radius in `[r_lo, r_hi]` where the profile equals `phi`, assuming it
    /// is monotone there (e.g. between consecutive extrema).
    pub fn radius_where(&self, phi: f64, r_lo: f64, r_hi: f64) -> Option<f64> {
        let f = |r: f64| self.phi(r) - phi;
        let (mut a, mut b) = (r_lo.max(1e-300).ln(), r_hi.ln());
        let (fa, fb) = (f(a.exp()), f(b.exp()));
        if !(fa * fb <= 0.0) {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if f(mid.exp()) * fa > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-15 {
                break;
            }
        }
        Some((0.5 * (a + b)).exp())
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    /// Largest value of `Phi` on the integrated range.
    pub fn sup(&self) -> f64 {
        self.samples().1.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Shoots `Phi_a` on `[0, r_max]` with the default integrator.
pub fn shoot_profile(m: u32, a: f64, r_max: f64, tol: f64) -> Result<SteadyProfile, SteadyError> {
    shoot_profile_with(m, a, r_max, tol, Shooter::DormandPrince)
}

/// Integrates in `s = log r`, where the equation becomes autonomous:
/// `Phi_ss + (m-2) Phi_s - (m-1)/2 sin(2 Phi) = 0`. Integration starts at
/// `r = 1e-6 / a` from the series `a r - (m-1) a^3 r^3 / (3(m+2))`.
pub fn shoot_profile_with(m: u32, a: f64, r_max: f64, tol: f64, shooter: Shooter) -> Result<SteadyProfile, SteadyError> {
    if m < 2 {
        return Err(SteadyError::InvalidInput(format!("m = {m} < 2")));
    }
    if !(r_max > 0.0) || !(tol > 0.0) || !a.is_finite() {
        return Err(SteadyError::InvalidInput(format!("a = {a}, r_max = {r_max}, tol = {tol}")));
    }
    if a == 0.0 {
        return Ok(SteadyProfile::trivial(m, r_max, tol, shooter));
    }
    let mf = m as f64;
    let sign = a.signum();
    let aa = a.abs();
    let r_start = (1e-6 / aa).max(1e-300);
    let mut prof = SteadyProfile {
        m,
        a,
        r_max,
        tol,
        shooter,
        r_start,
        extrema: Vec::new(),
        sign,
        knots: Vec::new(),
    };
    if r_start >= r_max {
        prof.r_start = r_max;
        return Ok(prof);
    }
    let s0 = r_start.ln();
    let s_end = r_max.ln();
    let ser = prof.series(r_start);
    // (u, u_s) with u_s = r Phi'.
    let y0 = [ser[0], r_start * ser[1]];
    prof.knots.push(Knot { s: s0, offset: 0.0, u: derivatives(mf, 0.0, y0[0], y0[1]) });

    let mut offset = 0.0;
    let mut start = (s0, y0);
    loop {
        let off = offset;
        let rhs = move |_s: f64, y: &[f64; 2]| {
            let (s2, _) = trig2(off, y[0]);
            [y[1], -(mf - 2.0) * y[1] + 0.5 * (mf - 1.0) * s2]
        };
        let mut switch_at: Option<(f64, [f64; 2])> = None;
        let knots = &mut prof.knots;
        let extrema = &mut prof.extrema;
        let observer = |st: &Step<2>| {
            let k1 = Knot { s: st.t1, offset: off, u: derivatives(mf, off, st.y1[0], st.y1[1]) };
            let k0 = *knots.last().unwrap();
            if k0.u[1] > 0.0 && k1.u[1] <= 0.0 || k0.u[1] < 0.0 && k1.u[1] >= 0.0 {
                extrema.push(locate_extremum(&k0, &k1));
            }
            knots.push(k1);
            if off == 0.0 && st.y1[0] > std::f64::consts::FRAC_PI_4 {
                switch_at = Some((st.t1, st.y1));
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        };
        let rtol = tol;
        let atol = 1e-300;
        let res = match shooter {
            Shooter::DormandPrince => DormandPrince::new(rtol, atol).with_h_max(0.25).integrate(&rhs, start.0, start.1, s_end, observer),
            Shooter::Rk4Doubling => Rk4Doubling::new(rtol, atol).with_h_max(0.25).integrate(&rhs, start.0, start.1, s_end, observer),
        };
        res.map_err(SteadyError::from_ode)?;
        match switch_at {
            Some((s, y)) => {
                offset = FRAC_PI_2;
                let u = y[0] - FRAC_PI_2;
                // Re-express the switch knot in the new offset; it becomes the
                // left end of every later segment.
                let last = prof.knots.last_mut().unwrap();
                *last = Knot { s, offset, u: derivatives(mf, offset, u, y[1]) };
                start = (s, [u, y[1]]);
                if s >= s_end {
                    break;
                }
            }
            None => break,
        }
    }
    for e in &mut prof.extrema {
        e.omega *= sign;
        e.psi *= sign;
    }
    Ok(prof)
}

/// Root of `u_s` between two knots by bisection on the quintic interpolant,
/// finished with secant steps.
fn locate_extremum(k0: &Knot, k1: &Knot) -> Extremum {
    let shift = k1.offset - k0.offset;
    let vq = |s: f64| hermite_quintic(k0.s, k1.s, [k0.u[1], k0.u[2], k0.u[3]], [k1.u[1], k1.u[2], k1.u[3]], s);
    let (mut a, mut b) = (k0.s, k1.s);
    let fa0 = k0.u[1];
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        let (fm, _) = vq(mid);
        if (fm > 0.0) == (fa0 > 0.0) && fm != 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-12 * (1.0 + a.abs()) {
            break;
        }
    }
    let mut s = 0.5 * (a + b);
    for _ in 0..3 {
        let (f, df) = vq(s);
        if df != 0.0 {
            let next = s - f / df;
            if next >= k0.s && next <= k1.s {
                s = next;
            }
        }
    }
    let (u, _) = hermite_quintic(k0.s, k1.s, [k0.u[0], k0.u[1], k0.u[2]], [k1.u[0] + shift, k1.u[1], k1.u[2]], s);
    let omega = k0.offset + u;
    let psi = (k0.offset - FRAC_PI_2) + u;
    Extremum { r: s.exp(), omega, psi }
}

/// The first `count` critical points `(r_k, omega_k)`.
pub fn extrema_sequence(profile: &SteadyProfile, count: usize) -> Result<Vec<(f64, f64)>, SteadyError> {
    if profile.extrema.len() < count {
        return Err(SteadyError::NotEnoughExtrema { found: profile.extrema.len(), requested: count });
    }
    Ok(profile.extrema[..count].iter().map(|e| (e.r, e.omega)).collect())
}

/// Shoots with a growing horizon until `count` extrema are present. For
/// `m >= 7` the profile is monotone and this ends in `NotEnoughExtrema`
/// once the horizon cap `r = 1e40 / a` is reached.
pub fn shoot_with_extrema(m: u32, a: f64, count: usize, tol: f64, shooter: Shooter) -> Result<SteadyProfile, SteadyError> {
    let aa = a.abs();
    let mut r_max = 10.0 / aa;
    let cap = 1e40 / aa;
    loop {
        let p = shoot_profile_with(m, a, r_max, tol, shooter)?;
        if p.extrema.len() > count {
            return Ok(p);
        }
        if r_max >= cap {
            if p.extrema.len() >= count {
                return Ok(p);
            }
            return Err(if m >= 7 || m == 2 {
                SteadyError::NotEnoughExtrema { found: p.extrema.len(), requested: count }
            } else {
                SteadyError::HorizonTooSmall { r_max }
            });
        }
        r_max = (r_max * 1e4).min(cap);
    }
}

/// `theta_m = max Phi_a = omega_1`, which is independent of `a`.
pub fn theta_threshold(m: u32, tol: f64) -> Result<f64, SteadyError> {
    if !(3..7).contains(&m) {
        return Err(SteadyError::UnsupportedDimension(m));
    }
    let p = shoot_with_extrema(m, 1.0, 1, tol, Shooter::DormandPrince)?;
    Ok(p.extrema[0].omega)
}

/// Number of sign changes of `Phi - level` on `[r_lo, r_hi]`.
pub fn crossing_count(profile: &SteadyProfile, level: f64, window: (f64, f64)) -> usize {
    let v = profile.deviation_samples(level, window.0, window.1);
    zero_number(&v, PROFILE_ZERO_TOL).unwrap_or(0)
}
