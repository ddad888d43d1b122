//! Closed-form helpers for symmetric 2×2 matrices.

use nalgebra::Matrix2;

pub type Mat2 = Matrix2<f64>;

/// Eigenvalues `(min, max)` of the symmetric part of `m`.
pub fn sym_eigenvalues(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let rad = (0.5 * (a - d)).hypot(b);
    (mean - rad, mean + rad)
}

pub fn min_eigenvalue(m: &Mat2) -> f64 {
    sym_eigenvalues(m).0
}

pub fn symmetrize(m: &Mat2) -> Mat2 {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &Mat2, tol: f64) -> bool {
    (m[(0, 1)] - m[(1, 0)]).abs() <= tol
}

/// `m ⪰ 0` up to `tol` on the smallest eigenvalue.
pub fn is_psd(m: &Mat2, tol: f64) -> bool {
    min_eigenvalue(m) >= -tol
}
