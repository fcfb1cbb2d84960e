use super::DiagnosticsError;

/// Default relative tolerance of [`zero_number`].
pub const DEFAULT_ZERO_TOL: f64 = 1e-7;

/// Number of sign changes of `v` after discarding samples with
/// `|v| <= eta * max|v|`. Zeros of even multiplicity (touching without a
/// sign change) are not counted.
pub fn zero_number(v: &[f64], eta: f64) -> Result<usize, DiagnosticsError> {
    let scale = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let cut = eta * scale;
    let mut last = 0.0_f64;
    let mut count = 0;
    let mut seen = false;
    for &x in v {
        if !(x.abs() > cut) {
            continue;
        }
        if seen && (x > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = x;
        seen = true;
    }
    if seen {
        Ok(count)
    } else {
        Err(DiagnosticsError::AllBelowTolerance)
    }
}
