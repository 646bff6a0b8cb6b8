//! Symmetric matrix storage used by problem data and primal points.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Position of `(i, j)` with `i <= j` in packed upper-triangular storage
/// (column by column).
#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

/// Dense symmetric matrix stored as its packed upper triangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Symmetrizes `a` as `(a + aᵀ)/2` and packs it.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
        let n = a.nrows();
        let mut m = Self::zeros(n);
        for j in 0..n {
            for i in 0..=j {
                m.data[packed_index(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Packed upper triangle, column by column.
    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.data[packed_index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.data[packed_index(i, j)] = v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Trace inner product `⟨self, other⟩`.
    pub fn dot(&self, other: &SymmetricMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        let mut s = 0.0;
        for j in 0..self.n {
            for i in 0..=j {
                let k = packed_index(i, j);
                let w = if i == j { 1.0 } else { 2.0 };
                s += w * self.data[k] * other.data[k];
            }
        }
        s
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &SymmetricMatrix) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// Nonzero upper-triangular entries `(i, j, v)` with `i <= j`, ordered by row then column.
    pub fn upper_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

/// Sparse symmetric matrix as a coordinate list of upper-triangular entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSymmetric {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSymmetric {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    /// Builds the matrix from `(i, j, v)` triples (0-based). Lower-triangular
    /// positions are mirrored, duplicates are summed and explicit zeros dropped.
    ///
    /// Panics if an index is out of range.
    pub fn new(n: usize, triples: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triples
            .into_iter()
            .map(|(i, j, v)| {
                assert!(i < n && j < n, "entry ({i},{j}) out of range for dimension {n}");
                if i <= j {
                    (i, j, v)
                } else {
                    (j, i, v)
                }
            })
            .collect();
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        Self { n, entries: merged }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, (0..n).map(|i| (i, i, 1.0)))
    }

    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        Self::new(n, [(i, j, 1.0)])
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        Self::from_symmetric(&SymmetricMatrix::from_dense(a))
    }

    pub fn from_symmetric(a: &SymmetricMatrix) -> Self {
        Self {
            n: a.dim(),
            entries: a.upper_entries(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Trace inner product with a dense symmetric matrix.
    pub fn dot_dense(&self, x: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| {
                if i == j {
                    v * x[(i, i)]
                } else {
                    v * (x[(i, j)] + x[(j, i)])
                }
            })
            .sum()
    }

    pub fn dot(&self, x: &SymmetricMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * x.get(i, i) } else { 2.0 * v * x.get(i, j) })
            .sum()
    }

    /// `target += alpha * self`.
    pub fn add_scaled_to(&self, alpha: f64, target: &mut DMatrix<f64>) {
        for &(i, j, v) in &self.entries {
            target[(i, j)] += alpha * v;
            if i != j {
                target[(j, i)] += alpha * v;
            }
        }
    }

    pub fn add_scaled_to_symmetric(&self, alpha: f64, target: &mut SymmetricMatrix) {
        for &(i, j, v) in &self.entries {
            target.set(i, j, target.get(i, j) + alpha * v);
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        self.add_scaled_to(1.0, &mut out);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| e.2.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * v } else { 2.0 * v * v })
            .sum::<f64>()
            .sqrt()
    }
}

/// Orthonormal vectorization of a symmetric matrix: diagonal entries as-is,
/// off-diagonal entries scaled by √2, so that `svec(A)·svec(B) = ⟨A, B⟩`.
pub fn svec_dense(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    let r2 = std::f64::consts::SQRT_2;
    for j in 0..n {
        for i in 0..=j {
            if i == j {
                out.push(a[(i, i)]);
            } else {
                out.push(r2 * 0.5 * (a[(i, j)] + a[(j, i)]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_layout_roundtrips_dense() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let s = SymmetricMatrix::from_dense(&a);
        assert_eq!(s.packed(), &[1.0, 2.0, 4.0, 3.0, 5.0, 6.0]);
        assert_eq!(s.to_dense(), a);
    }

    #[test]
    fn sparse_merges_mirrors_and_drops_zeros() {
        let s = SparseSymmetric::new(3, [(1, 0, 1.0), (0, 1, 2.0), (2, 2, 0.0), (2, 2, 1.5)]);
        assert_eq!(s.entries(), &[(0, 1, 3.0), (2, 2, 1.5)]);
        let d = s.to_dense();
        assert_eq!(d[(1, 0)], 3.0);
        assert_eq!(d[(0, 1)], 3.0);
    }

    #[test]
    fn inner_products_agree() {
        let a = SparseSymmetric::new(2, [(0, 0, 1.0), (0, 1, -0.5), (1, 1, 2.0)]);
        let x = SymmetricMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 4.0]));
        let expected = 3.0 - 1.0 + 8.0;
        assert_eq!(a.dot(&x), expected);
        assert_eq!(a.dot_dense(&x.to_dense()), expected);
        assert_eq!(SymmetricMatrix::from_symmetric_sparse(&a).dot(&x), expected);
    }

    #[test]
    fn svec_is_isometric() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, -1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.5, -3.0, -3.0, 2.0]);
        let lhs: f64 = svec_dense(&a).iter().zip(svec_dense(&b)).map(|(x, y)| x * y).sum();
        assert!((lhs - a.dot(&b)).abs() < 1e-14);
    }

    impl SymmetricMatrix {
        fn from_symmetric_sparse(a: &SparseSymmetric) -> Self {
            let mut out = SymmetricMatrix::zeros(a.dim());
            a.add_scaled_to_symmetric(1.0, &mut out);
            out
        }
    }
}
