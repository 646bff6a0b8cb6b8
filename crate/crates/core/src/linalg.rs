//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Relative threshold used for every numerical-rank decision.
pub const RANK_TOL: f64 = 1e-9;

/// Eigen-decomposition of a symmetric matrix with eigenvalues in ascending order.
pub fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Smallest eigenvalue and a unit eigenvector. Empty matrices report `+∞`.
pub fn min_eigenpair(a: &DMatrix<f64>) -> (f64, DVector<f64>) {
    if a.nrows() == 0 {
        return (f64::INFINITY, DVector::zeros(0));
    }
    let (vals, vecs) = sym_eigen(a);
    (vals[0], vecs.column(0).into_owned())
}

pub fn spectral_norm_sym(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let (vals, _) = sym_eigen(a);
    vals[0].abs().max(vals[vals.len() - 1].abs())
}

/// Singular values of `a` (any shape), descending.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Count of values above `RANK_TOL · max`.
pub fn rank_from_values(values: &[f64]) -> usize {
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return 0;
    }
    values.iter().filter(|v| v.abs() > RANK_TOL * top).count()
}

pub fn matrix_rank(a: &DMatrix<f64>) -> usize {
    rank_from_values(&singular_values(a))
}

/// Orthonormal basis (as columns) of the null space of `a` (`r × n`).
pub fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // Pad to at least n rows so the SVD returns a full right factor.
    let rows = a.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let top = svd.singular_values.iter().fold(0.0f64, |m, v| m.max(*v));
    let cols: Vec<usize> = (0..n)
        .filter(|&k| top == 0.0 || svd.singular_values[k] <= RANK_TOL * top)
        .collect();
    let mut basis = DMatrix::zeros(n, cols.len());
    for (c, &k) in cols.iter().enumerate() {
        basis.set_column(c, &vt.row(k).transpose());
    }
    basis
}

/// Minimum-norm least-squares solution of `a x ≈ b`, plus whether `a` was
/// column-rank deficient.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, bool) {
    let n = a.ncols();
    if n == 0 {
        return (DVector::zeros(0), false);
    }
    let rows = a.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let mut rhs = DVector::zeros(rows);
    rhs.rows_mut(0, a.nrows()).copy_from(b);
    let svd = padded.svd(true, true);
    let top = svd.singular_values.iter().fold(0.0f64, |m, v| m.max(*v));
    let eps = RANK_TOL * top;
    let deficient = top == 0.0 || svd.singular_values.iter().any(|&s| s <= eps);
    let x = svd
        .solve(&rhs, eps.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DVector::zeros(n));
    (x, deficient)
}

/// `X = V diag(max(λ,0)) Vᵀ` factor with `cols` columns, taking the largest
/// eigenvalues. Returns the factor and the smallest eigenvalue seen.
pub fn psd_factor(x: &DMatrix<f64>, cols: usize) -> (DMatrix<f64>, f64) {
    let n = x.nrows();
    let (vals, vecs) = sym_eigen(x);
    let min = if n > 0 { vals[0] } else { 0.0 };
    let mut y = DMatrix::zeros(n, cols);
    for c in 0..cols.min(n) {
        let k = n - 1 - c;
        let v = vals[k].max(0.0).sqrt();
        if v > 0.0 {
            y.set_column(c, &(vecs.column(k) * v));
        }
    }
    (y, min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_is_sorted() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let (vals, vecs) = sym_eigen(&a);
        assert_eq!(vals[0], -1.0);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = null_space(&a);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).norm() < 1e-14);
        assert!((n.transpose() * &n - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn lstsq_min_norm_for_duplicate_columns() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![2.0, 0.0]);
        let (x, deficient) = lstsq(&a, &b);
        assert!(deficient);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
