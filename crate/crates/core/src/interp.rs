//! Piecewise Hermite interpolation on sorted abscissae.

/// Index `i` with `x[i] <= v <= x[i+1]`, clamped to the valid cell range.
pub fn locate(x: &[f64], v: f64) -> usize {
    debug_assert!(x.len() >= 2);
    let n = x.len();
    if v <= x[0] {
        return 0;
    }
    if v >= x[n - 1] {
        return n - 2;
    }
    match x.binary_search_by(|p| p.partial_cmp(&v).unwrap()) {
        Ok(i) => i.min(n - 2),
        Err(i) => i - 1,
    }
}

/// Cubic Hermite value and derivative on `[x0, x1]`.
#[allow(clippy::too_many_arguments)]
pub fn hermite_cubic(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = (6.0 * t2 - 6.0 * t) / h;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = (-6.0 * t2 + 6.0 * t) / h;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let dv = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
    (v, dv)
}

/// Quintic Hermite interpolant through value, first and second derivative
/// at both ends. Returns value and first derivative.
pub fn hermite_quintic(x0: f64, x1: f64, p0: [f64; 3], p1: [f64; 3], x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
    let h3 = 0.5 * t3 - t4 + 0.5 * t5;
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let v = h0 * p0[0]
        + h * h1 * p0[1]
        + h * h * h2 * p0[2]
        + h * h * h3 * p1[2]
        + h * h4 * p1[1]
        + h5 * p1[0];
    let d0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let d1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let d2 = t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4;
    let d3 = 1.5 * t2 - 4.0 * t3 + 2.5 * t4;
    let d4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let d5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let dv = (d0 * p0[0] + d5 * p1[0]) / h
        + d1 * p0[1]
        + d4 * p1[1]
        + h * (d2 * p0[2] + d3 * p1[2]);
    (v, dv)
}

/// Monotone piecewise cubic (Fritsch-Carlson / Fritsch-Butland slopes).
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 2, "need at least two points");
        Self { x: x.to_vec(), y: y.to_vec(), d: pchip_slopes(x, y) }
    }

    pub fn eval(&self, v: f64) -> f64 {
        self.eval_with_derivative(v).0
    }

    pub fn derivative(&self, v: f64) -> f64 {
        self.eval_with_derivative(v).1
    }

    pub fn eval_with_derivative(&self, v: f64) -> (f64, f64) {
        let i = locate(&self.x, v);
        hermite_cubic(
            self.x[i],
            self.x[i + 1],
            self.y[i],
            self.y[i + 1],
            self.d[i],
            self.d[i + 1],
            v,
        )
    }
}

/// Not-a-knot cubic spline, stored in Hermite form. Falls back to PCHIP
/// slopes below four points.
#[derive(Debug, Clone)]
pub struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Spline {
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 2, "need at least two points");
        let d = if x.len() < 4 { pchip_slopes(x, y) } else { not_a_knot_slopes(x, y) };
        Self { x: x.to_vec(), y: y.to_vec(), d }
    }

    pub fn eval(&self, v: f64) -> f64 {
        self.eval_with_derivative(v).0
    }

    pub fn eval_with_derivative(&self, v: f64) -> (f64, f64) {
        let i = locate(&self.x, v);
        hermite_cubic(self.x[i], self.x[i + 1], self.y[i], self.y[i + 1], self.d[i], self.d[i + 1], v)
    }
}

fn not_a_knot_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let (mut lower, mut diag, mut upper, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 1..n - 1 {
        lower[i] = h[i];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        upper[i] = h[i - 1];
        rhs[i] = 3.0 * (h[i] * delta[i - 1] + h[i - 1] * delta[i]);
    }
    let d0 = x[2] - x[0];
    diag[0] = h[1];
    upper[0] = d0;
    rhs[0] = ((h[0] + 2.0 * d0) * h[1] * delta[0] + h[0] * h[0] * delta[1]) / d0;
    let dn = x[n - 1] - x[n - 3];
    diag[n - 1] = h[n - 3];
    lower[n - 1] = dn;
    rhs[n - 1] = (h[n - 2] * h[n - 2] * delta[n - 3] + (2.0 * dn + h[n - 2]) * h[n - 3] * delta[n - 2]) / dn;
    crate::linalg::solve_tridiagonal(&lower, &diag, &upper, &mut rhs).expect("spline system is nonsingular");
    rhs
}

/// Shape-preserving nodal slopes, as used by SciPy's `PchipInterpolator`.
pub fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 * d1 <= 0.0 {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// Second order derivative estimates at every node of a nonuniform grid:
/// centered three-point formula inside, one-sided three-point formula at the
/// ends.
pub fn nodal_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 3);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let hm = x[i] - x[i - 1];
        let hp = x[i + 1] - x[i];
        d[i] = (hm * hm * (y[i + 1] - y[i]) + hp * hp * (y[i] - y[i - 1])) / (hm * hp * (hm + hp));
    }
    d[0] = one_sided(x[0], x[1], x[2], y[0], y[1], y[2]);
    d[n - 1] = one_sided(x[n - 1], x[n - 2], x[n - 3], y[n - 1], y[n - 2], y[n - 3]);
    d
}

/// Derivative at `a` of the parabola through three points.
fn one_sided(a: f64, b: f64, c: f64, ya: f64, yb: f64, yc: f64) -> f64 {
    let la = (2.0 * a - b - c) / ((a - b) * (a - c));
    let lb = (a - c) / ((b - a) * (b - c));
    let lc = (a - b) / ((c - a) * (c - b));
    la * ya + lb * yb + lc * yc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_clamps() {
        let x = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(locate(&x, -1.0), 0);
        assert_eq!(locate(&x, 1.0), 1);
        assert_eq!(locate(&x, 1.5), 1);
        assert_eq!(locate(&x, 3.0), 2);
        assert_eq!(locate(&x, 9.0), 2);
    }

    #[test]
    fn quintic_reproduces_quintic() {
        let f = |x: f64| [x.powi(5) - 2.0 * x * x, 5.0 * x.powi(4) - 4.0 * x, 20.0 * x.powi(3) - 4.0];
        let (a, b) = (0.3, 1.1);
        for k in 0..=10 {
            let x = a + (b - a) * k as f64 / 10.0;
            let (v, dv) = hermite_quintic(a, b, f(a), f(b), x);
            assert!((v - f(x)[0]).abs() < 1e-13);
            assert!((dv - f(x)[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn pchip_preserves_monotone_data() {
        let x = [0.0, 1.0, 1.5, 4.0, 5.0];
        let y = [0.0, 0.1, 3.0, 3.1, 10.0];
        let p = Pchip::new(&x, &y);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=500 {
            let v = p.eval(5.0 * k as f64 / 500.0);
            assert!(v >= prev - 1e-14);
            prev = v;
        }
    }

    #[test]
    fn spline_reproduces_cubics() {
        let f = |x: f64| 2.0 * x.powi(3) - x * x + 0.5;
        let x: Vec<f64> = (0..12).map(|k| 0.1 * (k as f64).powf(1.3)).collect();
        let y: Vec<f64> = x.iter().map(|&v| f(v)).collect();
        let s = Spline::new(&x, &y);
        for k in 0..=100 {
            let v = x[11] * k as f64 / 100.0;
            let (a, da) = s.eval_with_derivative(v);
            assert!((a - f(v)).abs() < 1e-12);
            assert!((da - (6.0 * v * v - 2.0 * v)).abs() < 1e-10);
        }
    }

    #[test]
    fn nodal_derivative_exact_for_quadratics() {
        let x = [0.0, 0.1, 0.3, 0.35, 0.9];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v * v - v + 2.0).collect();
        let d = nodal_derivative(&x, &y);
        for (xi, di) in x.iter().zip(d) {
            assert!((di - (6.0 * xi - 1.0)).abs() < 1e-12);
        }
    }
}
