//! Thomas algorithm for tridiagonal systems.
//!
//! The policy-iteration matrices are strictly diagonally dominant
//! M-matrices, so elimination without pivoting is stable.

/// Solves the system with diagonals (`sub`, `diag`, `sup`); `sub[0]` and
/// `sup[n-1]` are ignored. Overwrites nothing; returns the solution.
pub fn solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n > 0 && sub.len() == n && sup.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        debug_assert!(denom != 0.0, "tridiagonal pivot vanished at row {i}");
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}
