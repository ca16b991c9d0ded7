//! Dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

/// Singular values at or below `rank_rtol * sigma_max` are treated as zero.
pub fn rank_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Minimum-norm least-squares solution of `a x ~ rhs` and its squared residual.
///
/// Uses an SVD so that rank-deficient and wide systems get the pseudo-inverse
/// solution.
pub fn lstsq_min_norm(a: &DMatrix<f64>, rhs: &DVector<f64>) -> (DVector<f64>, f64) {
    if a.ncols() == 0 {
        return (DVector::zeros(0), rhs.norm_squared());
    }
    let svd = SVD::new(a.clone(), true, true);
    let sigma_max = svd.singular_values.max();
    let tol = rank_tolerance(a.nrows(), a.ncols(), sigma_max);
    let x = if sigma_max > 0.0 {
        svd.solve(rhs, tol).expect("u and v were computed")
    } else {
        DVector::zeros(a.ncols())
    };
    let residual = (a * &x - rhs).norm_squared();
    (x, residual)
}

/// Pseudo-inverse of a symmetric positive semidefinite matrix.
pub fn psd_pinv(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(k.clone());
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let tol = rank_tolerance(n, n, lmax).max(f64::MIN_POSITIVE);
    let inv = eig
        .eigenvalues
        .map(|v| if v > tol { 1.0 / v } else { 0.0 });
    let q = &eig.eigenvectors;
    q * DMatrix::from_diagonal(&inv) * q.transpose()
}

/// Orthogonal projector onto the null space of `a`, `I - A^+ A`.
pub fn null_space_projector(a: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.ncols();
    let svd = SVD::new(a.clone(), false, true);
    let sigma_max = svd.singular_values.max();
    let tol = rank_tolerance(a.nrows(), m, sigma_max);
    let v_t = svd.v_t.expect("v_t was requested");
    let mut p = DMatrix::identity(m, m);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            let row = v_t.row(i).transpose();
            p -= &row * row.transpose();
        }
    }
    p
}

/// Columns `cols` of `a`.
pub fn select_columns(a: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}
