//! Row/column kernels shared by the dense and sparse coefficient matrices.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::sparse::DualSparseMatrix;

/// Access pattern needed by the extended Kaczmarz iterations: single-row and
/// single-column products against a dense block, plus full products for
/// residual recomputation.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// Stored entries (every entry for a dense matrix).
    fn nnz(&self) -> usize;
    fn row_nnz(&self, i: usize) -> usize;
    fn col_nnz(&self, j: usize) -> usize;

    fn row_sq_norms(&self) -> Vec<f64>;
    fn col_sq_norms(&self) -> Vec<f64>;
    fn frobenius_norm_sq(&self) -> f64;

    /// `A X`.
    fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix>;
    /// `Aᵀ Z`.
    fn transpose_apply(&self, z: &DenseMatrix) -> Result<DenseMatrix>;

    /// `out = A[:, j]ᵀ Z`.
    fn col_dot(&self, j: usize, z: &DenseMatrix, out: &mut [f64]);
    /// `Z += alpha · A[:, j] cᵀ`.
    fn col_axpy(&self, j: usize, alpha: f64, c: &[f64], z: &mut DenseMatrix);
    /// `out = A[i, :] X`.
    fn row_dot(&self, i: usize, x: &DenseMatrix, out: &mut [f64]);
    /// `X += alpha · A[i, :]ᵀ dᵀ`.
    fn row_axpy(&self, i: usize, alpha: f64, d: &[f64], x: &mut DenseMatrix);

    fn to_dense(&self) -> DenseMatrix;
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }

    fn ncols(&self) -> usize {
        self.cols()
    }

    fn nnz(&self) -> usize {
        self.rows() * self.cols()
    }

    fn row_nnz(&self, _i: usize) -> usize {
        self.cols()
    }

    fn col_nnz(&self, _j: usize) -> usize {
        self.rows()
    }

    fn row_sq_norms(&self) -> Vec<f64> {
        DenseMatrix::row_sq_norms(self)
    }

    fn col_sq_norms(&self) -> Vec<f64> {
        DenseMatrix::col_sq_norms(self)
    }

    fn frobenius_norm_sq(&self) -> f64 {
        DenseMatrix::frobenius_norm_sq(self)
    }

    fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.matmul(x)
    }

    fn transpose_apply(&self, z: &DenseMatrix) -> Result<DenseMatrix> {
        DenseMatrix::transpose_apply(self, z)
    }

    fn col_dot(&self, j: usize, z: &DenseMatrix, out: &mut [f64]) {
        out.fill(0.0);
        for k in 0..self.rows() {
            let a = self[(k, j)];
            for (o, v) in out.iter_mut().zip(z.row(k)) {
                *o += a * v;
            }
        }
    }

    fn col_axpy(&self, j: usize, alpha: f64, c: &[f64], z: &mut DenseMatrix) {
        for k in 0..self.rows() {
            let a = alpha * self[(k, j)];
            for (zv, cv) in z.row_mut(k).iter_mut().zip(c) {
                *zv += a * cv;
            }
        }
    }

    fn row_dot(&self, i: usize, x: &DenseMatrix, out: &mut [f64]) {
        out.fill(0.0);
        for (k, &a) in self.row(i).iter().enumerate() {
            for (o, v) in out.iter_mut().zip(x.row(k)) {
                *o += a * v;
            }
        }
    }

    fn row_axpy(&self, i: usize, alpha: f64, d: &[f64], x: &mut DenseMatrix) {
        for (k, &a) in self.row(i).iter().enumerate() {
            let a = alpha * a;
            for (xv, dv) in x.row_mut(k).iter_mut().zip(d) {
                *xv += a * dv;
            }
        }
    }

    fn to_dense(&self) -> DenseMatrix {
        self.clone()
    }
}

impl LinearOperator for DualSparseMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }

    fn ncols(&self) -> usize {
        self.cols()
    }

    fn nnz(&self) -> usize {
        DualSparseMatrix::nnz(self)
    }

    fn row_nnz(&self, i: usize) -> usize {
        self.row(i).0.len()
    }

    fn col_nnz(&self, j: usize) -> usize {
        self.col(j).0.len()
    }

    fn row_sq_norms(&self) -> Vec<f64> {
        DualSparseMatrix::row_sq_norms(self)
    }

    fn col_sq_norms(&self) -> Vec<f64> {
        DualSparseMatrix::col_sq_norms(self)
    }

    fn frobenius_norm_sq(&self) -> f64 {
        DualSparseMatrix::frobenius_norm_sq(self)
    }

    fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.matmul(x)
    }

    fn transpose_apply(&self, z: &DenseMatrix) -> Result<DenseMatrix> {
        DualSparseMatrix::transpose_apply(self, z)
    }

    fn col_dot(&self, j: usize, z: &DenseMatrix, out: &mut [f64]) {
        out.fill(0.0);
        let (idx, val) = self.col(j);
        for (&k, &a) in idx.iter().zip(val) {
            for (o, v) in out.iter_mut().zip(z.row(k)) {
                *o += a * v;
            }
        }
    }

    fn col_axpy(&self, j: usize, alpha: f64, c: &[f64], z: &mut DenseMatrix) {
        let (idx, val) = self.col(j);
        for (&k, &a) in idx.iter().zip(val) {
            let a = alpha * a;
            for (zv, cv) in z.row_mut(k).iter_mut().zip(c) {
                *zv += a * cv;
            }
        }
    }

    fn row_dot(&self, i: usize, x: &DenseMatrix, out: &mut [f64]) {
        out.fill(0.0);
        let (idx, val) = self.row(i);
        for (&k, &a) in idx.iter().zip(val) {
            for (o, v) in out.iter_mut().zip(x.row(k)) {
                *o += a * v;
            }
        }
    }

    fn row_axpy(&self, i: usize, alpha: f64, d: &[f64], x: &mut DenseMatrix) {
        let (idx, val) = self.row(i);
        for (&k, &a) in idx.iter().zip(val) {
            let a = alpha * a;
            for (xv, dv) in x.row_mut(k).iter_mut().zip(d) {
                *xv += a * dv;
            }
        }
    }

    fn to_dense(&self) -> DenseMatrix {
        DualSparseMatrix::to_dense(self)
    }
}

/// A validated coefficient matrix: no all-zero row and no all-zero column.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemMatrix {
    Dense(DenseMatrix),
    Sparse(DualSparseMatrix),
}

impl SystemMatrix {
    pub fn dense(a: DenseMatrix) -> Result<Self> {
        if let Some(i) = (0..a.rows()).find(|&i| a.row(i).iter().all(|&v| v == 0.0)) {
            return Err(Error::ZeroRow(i));
        }
        if let Some(j) = (0..a.cols()).find(|&j| (0..a.rows()).all(|i| a[(i, j)] == 0.0)) {
            return Err(Error::ZeroColumn(j));
        }
        Ok(Self::Dense(a))
    }

    /// Sparse matrices are validated when built.
    pub fn sparse(a: DualSparseMatrix) -> Self {
        Self::Sparse(a)
    }

    pub fn transpose(&self) -> Self {
        match self {
            Self::Dense(a) => Self::Dense(a.transpose()),
            Self::Sparse(a) => Self::Sparse(a.transpose()),
        }
    }

    /// Fraction of nonzero entries.
    pub fn density(&self) -> f64 {
        match self {
            Self::Dense(a) => {
                let nz = a.data().iter().filter(|&&v| v != 0.0).count();
                nz as f64 / a.data().len() as f64
            }
            Self::Sparse(a) => a.density(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Self::Sparse(_))
    }
}

macro_rules! dispatch {
    ($self:ident, $a:ident => $e:expr) => {
        match $self {
            SystemMatrix::Dense($a) => $e,
            SystemMatrix::Sparse($a) => $e,
        }
    };
}

impl LinearOperator for SystemMatrix {
    fn nrows(&self) -> usize {
        dispatch!(self, a => a.nrows())
    }

    fn ncols(&self) -> usize {
        dispatch!(self, a => a.ncols())
    }

    fn nnz(&self) -> usize {
        dispatch!(self, a => LinearOperator::nnz(a))
    }

    fn row_nnz(&self, i: usize) -> usize {
        dispatch!(self, a => a.row_nnz(i))
    }

    fn col_nnz(&self, j: usize) -> usize {
        dispatch!(self, a => a.col_nnz(j))
    }

    fn row_sq_norms(&self) -> Vec<f64> {
        dispatch!(self, a => LinearOperator::row_sq_norms(a))
    }

    fn col_sq_norms(&self) -> Vec<f64> {
        dispatch!(self, a => LinearOperator::col_sq_norms(a))
    }

    fn frobenius_norm_sq(&self) -> f64 {
        dispatch!(self, a => LinearOperator::frobenius_norm_sq(a))
    }

    fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        dispatch!(self, a => a.apply(x))
    }

    fn transpose_apply(&self, z: &DenseMatrix) -> Result<DenseMatrix> {
        dispatch!(self, a => LinearOperator::transpose_apply(a, z))
    }

    fn col_dot(&self, j: usize, z: &DenseMatrix, out: &mut [f64]) {
        dispatch!(self, a => a.col_dot(j, z, out))
    }

    fn col_axpy(&self, j: usize, alpha: f64, c: &[f64], z: &mut DenseMatrix) {
        dispatch!(self, a => a.col_axpy(j, alpha, c, z))
    }

    fn row_dot(&self, i: usize, x: &DenseMatrix, out: &mut [f64]) {
        dispatch!(self, a => a.row_dot(i, x, out))
    }

    fn row_axpy(&self, i: usize, alpha: f64, d: &[f64], x: &mut DenseMatrix) {
        dispatch!(self, a => a.row_axpy(i, alpha, d, x))
    }

    fn to_dense(&self) -> DenseMatrix {
        dispatch!(self, a => LinearOperator::to_dense(a))
    }
}
