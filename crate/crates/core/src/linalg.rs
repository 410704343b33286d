//! Small dense helpers for 4x4 Hermitian operators.

use nalgebra::{Matrix4, SymmetricEigen, Vector4, SVD};
use num_complex::Complex64;

type M4 = Matrix4<Complex64>;

/// Largest entry of `|m - m^dagger|`.
pub fn hermitian_deviation(m: &M4) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Columns of the returned matrix are the eigenvectors.
pub fn hermitian_eigen(m: &M4) -> (Vector4<f64>, M4) {
    // Symmetrize so that rounding noise in the strict upper/lower parts
    // cannot leak into the solver.
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut vals = Vector4::zeros();
    let mut vecs = M4::zeros();
    for (k, &i) in order.iter().enumerate() {
        vals[k] = eig.eigenvalues[i];
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &M4) -> Vector4<f64> {
    hermitian_eigen(m).0
}

/// Factor `V` with `rho = V V^dagger`, columns `sqrt(w_n) |psi_n>`.
/// Negative eigenvalues are clamped to zero.
pub fn sqrt_factor(rho: &M4) -> M4 {
    let (vals, mut vecs) = hermitian_eigen(rho);
    for k in 0..4 {
        let w = vals[k].max(0.0).sqrt();
        let mut col = vecs.column_mut(k);
        col *= Complex64::new(w, 0.0);
    }
    vecs
}

/// Sum of singular values.
pub fn nuclear_norm(m: &M4) -> f64 {
    SVD::new(*m, false, false).singular_values.sum()
}

/// Singular values, descending.
pub fn singular_values(m: &M4) -> Vector4<f64> {
    let mut sv = SVD::new(*m, false, false).singular_values;
    sv.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Operator norm of a Hermitian matrix (largest |eigenvalue|).
pub fn op_norm_hermitian(m: &M4) -> f64 {
    hermitian_eigenvalues(m)
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Trace norm of a Hermitian matrix (sum of |eigenvalues|).
pub fn trace_norm_hermitian(m: &M4) -> f64 {
    hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
}

/// Eigenvalues `(larger, smaller)` of the 2x2 Hermitian matrix `[[a, b], [b*, d]]`.
#[inline]
pub fn eig2_hermitian(a: f64, d: f64, b: Complex64) -> (f64, f64) {
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = (half * half + b.norm_sqr()).sqrt();
    (mean + r, mean - r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let mut m = M4::zeros();
        m[(0, 0)] = c(0.1, 0.0);
        m[(1, 1)] = c(0.5, 0.0);
        m[(1, 2)] = c(0.1, 0.2);
        m[(2, 1)] = c(0.1, -0.2);
        m[(2, 2)] = c(0.3, 0.0);
        m[(3, 3)] = c(0.1, 0.0);
        let (vals, vecs) = hermitian_eigen(&m);
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2] && vals[2] >= vals[3]);
        let diag = M4::from_diagonal(&vals.map(|v| c(v, 0.0)));
        let back = vecs * diag * vecs.adjoint();
        assert!((back - m).norm() < 1e-13);
        assert!((vecs.adjoint() * vecs - M4::identity()).norm() < 1e-13);
    }

    #[test]
    fn eig2_matches_general_solver() {
        let (hi, lo) = eig2_hermitian(0.5, 0.3, c(0.1, 0.2));
        let mut m = M4::zeros();
        m[(1, 1)] = c(0.5, 0.0);
        m[(1, 2)] = c(0.1, 0.2);
        m[(2, 1)] = c(0.1, -0.2);
        m[(2, 2)] = c(0.3, 0.0);
        let vals = hermitian_eigenvalues(&m);
        assert!((vals[0] - hi).abs() < 1e-14);
        assert!((vals[1].min(vals[2]).min(vals[3]) - lo.min(0.0)).abs() < 1e-14);
    }

    #[test]
    fn sqrt_factor_reproduces_matrix() {
        let mut m = M4::zeros();
        m[(1, 1)] = c(0.36, 0.0);
        m[(1, 2)] = c(0.12, 0.3);
        m[(2, 1)] = c(0.12, -0.3);
        m[(2, 2)] = c(0.29, 0.0);
        m[(3, 3)] = c(0.35, 0.0);
        let v = sqrt_factor(&m);
        assert!((v * v.adjoint() - m).norm() < 1e-13);
    }

    #[test]
    fn norms_of_diagonal() {
        let m = M4::from_diagonal(&Vector4::new(c(0.5, 0.0), c(-0.25, 0.0), c(0.0, 0.0), c(-0.25, 0.0)));
        assert!((op_norm_hermitian(&m) - 0.5).abs() < 1e-15);
        assert!((trace_norm_hermitian(&m) - 1.0).abs() < 1e-15);
        assert!((nuclear_norm(&m) - 1.0).abs() < 1e-14);
    }
}
