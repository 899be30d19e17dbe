//! Row-major dense matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// A real matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Wraps `data` (row-major). Rejects a length mismatch and any NaN/Inf.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::BadShape {
                    rows: rows.len(),
                    cols,
                    len: data.len() + r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// A single column built from `values`.
    pub fn column(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    /// Sum of squares of all entries.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.frobenius_norm_sq())
    }

    /// Squared Euclidean norm of every row.
    pub fn row_sq_norms(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v * v).sum())
            .collect()
    }

    /// Squared Euclidean norm of every column.
    pub fn col_sq_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (acc, v) in out.iter_mut().zip(self.row(i)) {
                *acc += v * v;
            }
        }
        out
    }

    /// Frobenius inner product `⟨self, other⟩`.
    pub fn frobenius_inner(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other, "frobenius_inner")?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn transpose_apply(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch {
                op: "transpose_apply",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let rhs_row = rhs.row(k);
            for (j, &a) in self.row(k).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[j * rhs.cols..(j + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self += alpha · x`
    pub fn axpy(&mut self, alpha: f64, x: &Self) -> Result<()> {
        self.check_same_shape(x, "axpy")?;
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += alpha * v;
        }
        Ok(())
    }

    /// Squared Frobenius distance `‖self − other‖²_F`.
    pub fn dist_sq(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other, "dist_sq")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other, "max_abs_diff")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max))
    }

    /// Horizontal concatenation `[self, rhs]`.
    pub fn hstack(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch {
                op: "hstack",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let cols = self.cols + rhs.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(rhs.row(i));
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }

    /// Vertical concatenation `[self; rhs]`.
    pub fn vstack(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.cols {
            return Err(Error::DimensionMismatch {
                op: "vstack",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&rhs.data);
        Ok(Self {
            rows: self.rows + rhs.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    fn zip_with(&self, rhs: &Self, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_shape(rhs, op)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    fn check_same_shape(&self, rhs: &Self, op: &'static str) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch {
                op,
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(DenseMatrix::identity(2).frobenius_norm_sq(), 2.0);
        assert_eq!(DenseMatrix::zeros(3, 4).frobenius_norm_sq(), 0.0);
        assert_eq!(m(&[&[3.0, 4.0]]).frobenius_norm_sq(), 25.0);
    }

    #[test]
    fn row_and_col_norms() {
        assert_eq!(m(&[&[1.0, 0.0], &[0.0, 2.0]]).row_sq_norms(), vec![1.0, 4.0]);
        assert_eq!(DenseMatrix::zeros(2, 3).row_sq_norms(), vec![0.0, 0.0]);
        assert_eq!(m(&[&[1.0, 1.0], &[2.0, 2.0]]).row_sq_norms(), vec![2.0, 8.0]);

        assert_eq!(m(&[&[1.0, 0.0], &[0.0, 2.0]]).col_sq_norms(), vec![1.0, 4.0]);
        assert_eq!(m(&[&[1.0, 1.0], &[2.0, 2.0]]).col_sq_norms(), vec![5.0, 5.0]);
        assert_eq!(m(&[&[1.0; 5]]).col_sq_norms(), vec![1.0; 5]);
    }

    #[test]
    fn matmul_examples() {
        let b = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        assert_eq!(DenseMatrix::identity(2).matmul(&b).unwrap(), b);
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert!(a.matmul(&DenseMatrix::zeros(2, 3)).unwrap().is_zero());
        let x = m(&[&[1.0], &[1.0]]);
        assert_eq!(a.matmul(&x).unwrap(), m(&[&[3.0], &[7.0]]));
        assert!(matches!(
            a.matmul(&DenseMatrix::zeros(3, 1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn transpose_apply_examples() {
        let z = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(DenseMatrix::identity(2).transpose_apply(&z).unwrap(), z);
        let a = m(&[&[1.0], &[1.0]]);
        assert_eq!(a.transpose_apply(&m(&[&[2.0], &[4.0]])).unwrap(), m(&[&[6.0]]));
        // (1, -1) is orthogonal to the single column of `a`.
        assert!(a.transpose_apply(&m(&[&[1.0], &[-1.0]])).unwrap().is_zero());
        assert!(a.transpose_apply(&DenseMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            DenseMatrix::new(2, 2, vec![1.0; 3]),
            Err(Error::BadShape { .. })
        ));
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn stacking() {
        let a = m(&[&[1.0], &[2.0]]);
        assert_eq!(a.hstack(&a).unwrap(), m(&[&[1.0, 1.0], &[2.0, 2.0]]));
        assert_eq!(a.vstack(&a).unwrap().shape(), (4, 1));
    }
}
