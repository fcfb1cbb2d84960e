//! Tridiagonal solver (Thomas algorithm without pivoting).

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("tridiagonal solve broke down at row {row} (pivot {pivot:e})")]
pub struct SingularPivot {
    pub row: usize,
    pub pivot: f64,
}

/// Solves `A x = rhs` where `A` has sub-diagonal `lower[i] = A[i][i-1]`
/// (`lower[0]` unused), diagonal `diag` and super-diagonal
/// `upper[i] = A[i][i+1]` (last entry unused). The solution overwrites `rhs`.
///
/// Stable for diagonally dominant systems, which is all the flow solver
/// produces on a well-formed grid.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
) -> Result<(), SingularPivot> {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    if n == 0 {
        return Ok(());
    }
    let mut c = vec![0.0; n];
    let mut pivot = diag[0];
    if !(pivot.abs() > f64::MIN_POSITIVE) || !pivot.is_finite() {
        return Err(SingularPivot { row: 0, pivot });
    }
    c[0] = upper[0] / pivot;
    rhs[0] /= pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if !(pivot.abs() > f64::MIN_POSITIVE) || !pivot.is_finite() {
            return Err(SingularPivot { row: i, pivot });
        }
        c[i] = upper[i] / pivot;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_poisson_1d() {
        // -u'' = 2 on (0,1), u(0)=u(1)=0, exact u = x(1-x); the 3-point
        // stencil is exact for quadratics.
        let n = 9;
        let h = 1.0 / (n as f64 + 1.0);
        let lower = vec![-1.0; n];
        let upper = vec![-1.0; n];
        let diag = vec![2.0; n];
        let mut rhs = vec![2.0 * h * h; n];
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs).unwrap();
        for (i, u) in rhs.iter().enumerate() {
            let x = (i as f64 + 1.0) * h;
            assert!((u - x * (1.0 - x)).abs() < 1e-13);
        }
    }

    #[test]
    fn reports_zero_pivot() {
        let mut rhs = vec![1.0, 1.0];
        let err = solve_tridiagonal(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &mut rhs).unwrap_err();
        assert_eq!(err.row, 0);
    }
}
