//! Small containers and dense linear-algebra helpers.

use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use nalgebra::{DMatrix, DVector};

use crate::{CMatrix, CVector, Complex64};

/// Row-major two-dimensional table, e.g. one channel vector per `(ap, user)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Table<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Default for Table<T> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<T> Table<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn empty() -> Self {
        Self { rows: 0, cols: 0, data: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.data.iter_mut()
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = &T> + '_ {
        (0..self.rows).map(move |r| &self[(r, c)])
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Table<U> {
        Table { rows: self.rows, cols: self.cols, data: self.data.iter().map(&mut f).collect() }
    }
}

impl<T> Index<(usize, usize)> for Table<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        assert!(r < self.rows && c < self.cols, "table index ({r}, {c}) out of bounds");
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Table<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        assert!(r < self.rows && c < self.cols, "table index ({r}, {c}) out of bounds");
        &mut self.data[r * self.cols + c]
    }
}

/// `a^H b`.
#[inline]
pub fn inner(a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(b)
}

/// Real inner product `Re(a^H b)` of two complex vectors seen as real vectors.
#[inline]
pub fn real_inner(a: &CVector, b: &CVector) -> f64 {
    a.dotc(b).re
}

/// Squared Euclidean norm.
#[inline]
pub fn norm_sqr(a: &CVector) -> f64 {
    a.norm_squared()
}

/// Natural log-determinant of a Hermitian positive-definite matrix.
/// Returns `None` when the Cholesky factorization fails.
pub fn hermitian_logdet(a: &CMatrix) -> Option<f64> {
    let chol = a.clone().cholesky()?;
    let l = chol.l_dirty();
    Some((0..a.nrows()).map(|i| 2.0 * libm::log(l[(i, i)].re)).sum())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `(0.5 (A + A^H))` to remove round-off asymmetry.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition of a real symmetric matrix: ascending eigenvalues and
/// the matching unit eigenvectors as columns.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = a.clone().symmetric_eigen();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Orthonormal basis (as columns) of the span of `vectors`, by modified
/// Gram-Schmidt with rank detection at relative tolerance `tol`.
pub fn orthonormal_basis(vectors: &[&CVector], tol: f64) -> Vec<CVector> {
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut basis: Vec<CVector> = Vec::new();
    for v in vectors {
        let mut r = (*v).clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&r);
                r.axpy(-c, q, Complex64::new(1.0, 0.0));
            }
        }
        let n = r.norm();
        if n > tol * scale && n > 0.0 {
            basis.push(r.unscale(n));
        }
    }
    basis
}

/// Removes from `v` its component in the span of the orthonormal `basis`.
pub fn project_out(v: &mut CVector, basis: &[CVector]) {
    for q in basis {
        let c = q.dotc(v);
        v.axpy(-c, q, Complex64::new(1.0, 0.0));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_indexing_is_row_major() {
        let t = Table::from_fn(2, 3, |r, c| r * 10 + c);
        assert_eq!(t[(1, 2)], 12);
        assert_eq!(t.row(1), &[10, 11, 12]);
        assert_eq!(t.column(1).copied().collect::<Vec<_>>(), [1, 11]);
    }

    #[test]
    fn logdet_of_diagonal() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(alloc::vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(3.0, 0.0)
        ]));
        assert!((hermitian_logdet(&a).unwrap() - libm::log(6.0)).abs() < 1e-12);
    }

    #[test]
    fn projection_removes_span() {
        let a = CVector::from_vec(alloc::vec![Complex64::new(1.0, 1.0), Complex64::new(0.0, 2.0), Complex64::new(1.0, 0.0)]);
        let b = CVector::from_vec(alloc::vec![Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0), Complex64::new(2.0, -1.0)]);
        let basis = orthonormal_basis(&[&a, &b, &a], 1e-12);
        assert_eq!(basis.len(), 2);
        let mut v = CVector::from_vec(alloc::vec![Complex64::new(3.0, 0.0), Complex64::new(-1.0, 1.0), Complex64::new(0.5, 0.5)]);
        project_out(&mut v, &basis);
        assert!(a.dotc(&v).norm() < 1e-12 && b.dotc(&v).norm() < 1e-12);
    }
}
