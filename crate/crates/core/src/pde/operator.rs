use crate::linalg::solve_tridiagonal;
use crate::model::{metric_factor, sphere_area, CellWeights, FlowParams, RadialGrid};

use super::PdeError;

/// The semi-discrete flow `theta_t = G (A theta + N(theta))` on one grid.
///
/// `A` is the variational finite-volume discretization of the radial
/// Laplacian together with the linear part `-(m-1) theta / r^2` of the
/// angular term, and `N(theta) = -(Z/V)(sin(2 theta)/2 - theta)` is the
/// remainder. `A` is symmetric in the `V`-weighted inner product and negative
/// definite, while `N` is non-decreasing in `theta`. Treating `A` implicitly
/// and `N` explicitly therefore gives a scheme that dissipates the discrete
/// energy and preserves order for every step size.
#[derive(Debug, Clone)]
pub(crate) struct Operator {
    n: usize,
    b: f64,
    /// Rows of `G A` for every node; boundary rows are zero.
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    /// `G Z / V`, the coefficient of the explicit nonlinearity.
    zeta: Vec<f64>,
    /// `|S^{m-1}| V / G`, the dissipation weight.
    pub dissipation_weight: Vec<f64>,
}

impl Operator {
    pub fn new(grid: &RadialGrid, params: &FlowParams) -> Self {
        let r = grid.nodes();
        let n = r.len();
        let w = CellWeights::new(grid, params.m);
        let area = sphere_area(params.m);
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut zeta = vec![0.0; n];
        let mut dissipation_weight = vec![0.0; n];
        for i in 1..n - 1 {
            let g = metric_factor(r[i], params.metric);
            let v = w.volume[i];
            let cm = w.face[i - 1] / (r[i] - r[i - 1]);
            let cp = w.face[i] / (r[i + 1] - r[i]);
            lower[i] = g * cm / v;
            upper[i] = g * cp / v;
            diag[i] = -g * (cm + cp + w.zero_order[i]) / v;
            zeta[i] = g * w.zero_order[i] / v;
            dissipation_weight[i] = area * v / g;
        }
        Self { n, b: params.b, lower, diag, upper, zeta, dissipation_weight }
    }

    /// `G A theta`, zero at the boundary nodes.
    pub fn linear(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 1..self.n - 1 {
            out[i] = self.lower[i] * theta[i - 1] + self.diag[i] * theta[i] + self.upper[i] * theta[i + 1];
        }
        out
    }

    /// `G N(theta)`, zero at the boundary nodes.
    pub fn explicit(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 1..self.n - 1 {
            let t = theta[i];
            out[i] = -self.zeta[i] * (0.5 * (2.0 * t).sin() - t);
        }
        out
    }

    /// Full right-hand side `G (A theta + N(theta))`.
    pub fn rhs(&self, theta: &[f64]) -> Vec<f64> {
        let mut l = self.linear(theta);
        for (li, ni) in l.iter_mut().zip(self.explicit(theta)) {
            *li += ni;
        }
        l
    }

    /// Lowers `theta` to the largest discrete sub-solution below it, i.e.
    /// the largest `u <= theta` with `rhs(u) >= 0` at every interior node,
    /// by projected nonlinear Gauss-Seidel. Returns the number of sweeps, or
    /// `None` if `max_sweeps` did not suffice.
    pub fn project_subsolution(&self, theta: &mut [f64], max_sweeps: usize) -> Option<usize> {
        for sweep in 0..max_sweeps {
            let mut changed = false;
            for i in 1..self.n - 1 {
                let side = self.lower[i] * theta[i - 1] + self.upper[i] * theta[i + 1];
                let f = |x: f64| side + self.diag[i] * x - self.zeta[i] * (0.5 * (2.0 * x).sin() - x);
                if f(theta[i]) >= 0.0 {
                    continue;
                }
                let mut x = theta[i];
                for _ in 0..50 {
                    let df = self.diag[i] + self.zeta[i] * (1.0 - (2.0 * x).cos());
                    if !(df < 0.0) {
                        break;
                    }
                    let next = x - f(x) / df;
                    if !(next < x) {
                        break;
                    }
                    x = next;
                    if f(x) >= 0.0 {
                        break;
                    }
                }
                if x < theta[i] {
                    theta[i] = x;
                    changed = true;
                }
            }
            if !changed {
                return Some(sweep);
            }
        }
        None
    }

    /// Solves `(I - c G A) u = rhs` for the interior values, with the
    /// boundary values `u_0 = 0`, `u_N = b`. `rhs` holds node values; its
    /// boundary entries are ignored.
    pub fn solve(&self, c: f64, rhs: &[f64]) -> Result<Vec<f64>, PdeError> {
        self.solve_with(c, rhs, self.b)
    }

    /// [`Self::solve`] with zero boundary values, for increments.
    pub fn solve_homogeneous(&self, c: f64, rhs: &[f64]) -> Result<Vec<f64>, PdeError> {
        self.solve_with(c, rhs, 0.0)
    }

    fn solve_with(&self, c: f64, rhs: &[f64], b: f64) -> Result<Vec<f64>, PdeError> {
        let m = self.n - 2;
        let mut lo = vec![0.0; m];
        let mut di = vec![0.0; m];
        let mut up = vec![0.0; m];
        let mut x = vec![0.0; m];
        for k in 0..m {
            let i = k + 1;
            lo[k] = -c * self.lower[i];
            di[k] = 1.0 - c * self.diag[i];
            up[k] = -c * self.upper[i];
            x[k] = rhs[i];
        }
        x[m - 1] += c * self.upper[self.n - 2] * b;
        solve_tridiagonal(&lo, &di, &up, &mut x).map_err(PdeError::LinearSolveFailure)?;
        let mut out = Vec::with_capacity(self.n);
        out.push(0.0);
        out.extend(x);
        out.push(b);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_part_annihilates_identity() {
        let g = RadialGrid::uniform(1.0, 40).unwrap().refine(16, 4).unwrap().0;
        for m in 2..=6 {
            let p = FlowParams::flat_linear(m, 1.0, 1.0);
            let op = Operator::new(&g, &p);
            let l = op.linear(g.nodes());
            assert!(l.iter().all(|v| v.abs() < 1e-9), "m={m}");
        }
    }

    #[test]
    fn solve_inverts_operator() {
        let g = RadialGrid::uniform(1.0, 30).unwrap();
        let p = FlowParams::flat_linear(3, 1.0, 0.7);
        let op = Operator::new(&g, &p);
        let u: Vec<f64> = g.nodes().iter().map(|r| 0.7 * r * r).collect();
        let c = 0.01;
        let lu = op.linear(&u);
        let rhs: Vec<f64> = u.iter().zip(&lu).map(|(a, b)| a - c * b).collect();
        let back = op.solve(c, &rhs).unwrap();
        for (a, b) in back.iter().zip(&u) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
