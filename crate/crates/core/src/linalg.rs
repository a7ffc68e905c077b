//! Small dense linear-algebra helpers shared by the oracle and the solver.

use nalgebra::DMatrix;

/// Relative singular-value threshold separating analytic zero modes from
/// rounding noise.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// Number of singular values above `relative_threshold * σ_max`.
pub fn numeric_rank(matrix: &DMatrix<f64>, relative_threshold: f64) -> usize {
    if matrix.is_empty() {
        return 0;
    }
    let sv = matrix.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > relative_threshold * max).count()
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m).first().cloned().unwrap_or(0.0)
}
