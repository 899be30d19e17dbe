//! Sparse matrices kept simultaneously in compressed-row and compressed-column
//! form. The extended Kaczmarz iteration alternates column sweeps (Z update)
//! and row sweeps (X update), so both access paths are needed every step.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct DualSparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    row_val: Vec<f64>,
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    col_val: Vec<f64>,
}

impl DualSparseMatrix {
    /// Builds both forms from coordinate triples `(row, col, value)`, 0-based.
    ///
    /// Explicit zeros are dropped. Duplicate coordinates, out-of-range indices,
    /// non-finite values and all-zero rows or columns are rejected.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::IndexOutOfBounds {
                    row: i,
                    col: j,
                    rows,
                    cols,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            entries.push((i, j, v));
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::DuplicateEntry {
                    row: w[0].0,
                    col: w[0].1,
                });
            }
        }
        entries.retain(|e| e.2 != 0.0);

        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_ptr = vec![0usize; cols + 1];
        for &(i, j, _) in &entries {
            row_ptr[i + 1] += 1;
            col_ptr[j + 1] += 1;
        }
        if let Some(i) = (0..rows).find(|&i| row_ptr[i + 1] == 0) {
            return Err(Error::ZeroRow(i));
        }
        if let Some(j) = (0..cols).find(|&j| col_ptr[j + 1] == 0) {
            return Err(Error::ZeroColumn(j));
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }

        // Entries are sorted row-major, so the row form falls out directly and
        // the column form stays sorted by row within each column.
        let nnz = entries.len();
        let row_idx = entries.iter().map(|e| e.1).collect();
        let row_val = entries.iter().map(|e| e.2).collect();
        let mut col_idx = vec![0usize; nnz];
        let mut col_val = vec![0.0; nnz];
        let mut next = col_ptr.clone();
        for &(i, j, v) in &entries {
            col_idx[next[j]] = i;
            col_val[next[j]] = v;
            next[j] += 1;
        }

        Ok(Self {
            rows,
            cols,
            row_ptr,
            row_idx,
            row_val,
            col_ptr,
            col_idx,
            col_val,
        })
    }

    pub fn from_dense(m: &DenseMatrix) -> Result<Self> {
        let mut triplets = Vec::new();
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.rows(), m.cols(), &triplets)
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
    pub fn nnz(&self) -> usize {
        self.row_val.len()
    }

    /// `nnz / (rows · cols)`.
    pub fn density(&self) -> f64 {
        self.nnz() as f64 / (self.rows as f64 * self.cols as f64)
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.row_idx[r.clone()], &self.row_val[r])
    }

    /// Row indices and values of column `j`.
    #[inline]
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.col_idx[r.clone()], &self.col_val[r])
    }

    /// Triples in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            out.extend(idx.iter().zip(val).map(|(&j, &v)| (i, j, v)));
        }
        out
    }

    /// Densifies from the row form.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// Densifies from the column form.
    pub fn to_dense_from_cols(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for j in 0..self.cols {
            let (idx, val) = self.col(j);
            for (&i, &v) in idx.iter().zip(val) {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// Materialized transpose: the two storage forms swap roles.
    pub fn transpose(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            row_ptr: self.col_ptr.clone(),
            row_idx: self.col_idx.clone(),
            row_val: self.col_val.clone(),
            col_ptr: self.row_ptr.clone(),
            col_idx: self.row_idx.clone(),
            col_val: self.row_val.clone(),
        }
    }

    pub fn row_sq_norms(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).1.iter().map(|v| v * v).sum())
            .collect()
    }

    pub fn col_sq_norms(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| self.col(j).1.iter().map(|v| v * v).sum())
            .collect()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.row_val.iter().map(|v| v * v).sum()
    }

    /// `self · x` using the row form.
    pub fn matmul(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != x.rows() {
            return Err(Error::DimensionMismatch {
                op: "sparse matmul",
                left: (self.rows, self.cols),
                right: x.shape(),
            });
        }
        let p = x.cols();
        let mut out = DenseMatrix::zeros(self.rows, p);
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            let out_row = out.row_mut(i);
            for (&k, &a) in idx.iter().zip(val) {
                for (o, b) in out_row.iter_mut().zip(x.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · z` using the column form.
    pub fn transpose_apply(&self, z: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != z.rows() {
            return Err(Error::DimensionMismatch {
                op: "sparse transpose_apply",
                left: (self.rows, self.cols),
                right: z.shape(),
            });
        }
        let p = z.cols();
        let mut out = DenseMatrix::zeros(self.cols, p);
        for j in 0..self.cols {
            let (idx, val) = self.col(j);
            let out_row = out.row_mut(j);
            for (&k, &a) in idx.iter().zip(val) {
                for (o, b) in out_row.iter_mut().zip(z.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DualSparseMatrix {
        DualSparseMatrix::from_triplets(
            3,
            2,
            &[(2, 1, 5.0), (0, 0, 1.0), (1, 1, -2.0), (2, 0, 3.0)],
        )
        .unwrap()
    }

    #[test]
    fn both_forms_agree() {
        let a = sample();
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.to_dense(), a.to_dense_from_cols());
        assert_eq!(a.col(0), (&[0usize, 2][..], &[1.0, 3.0][..]));
        assert_eq!(a.row(2), (&[0usize, 1][..], &[3.0, 5.0][..]));
    }

    #[test]
    fn rejects_invalid_triplets() {
        assert_eq!(
            DualSparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0)]),
            Err(Error::DuplicateEntry { row: 0, col: 0 })
        );
        assert!(matches!(
            DualSparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]),
            Err(Error::IndexOutOfBounds { .. })
        ));
        assert_eq!(
            DualSparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0)]),
            Err(Error::ZeroRow(1))
        );
        assert_eq!(
            DualSparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 1.0)]),
            Err(Error::ZeroColumn(1))
        );
        // An explicit zero does not count towards coverage.
        assert_eq!(
            DualSparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 0.0), (1, 0, 2.0)]),
            Err(Error::ZeroColumn(1))
        );
    }

    #[test]
    fn products_match_dense() {
        let a = sample();
        let d = a.to_dense();
        let x = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, -1.0]]).unwrap();
        assert_eq!(a.matmul(&x).unwrap(), d.matmul(&x).unwrap());
        let z = DenseMatrix::from_rows(&[[1.0], [2.0], [0.5]]).unwrap();
        assert_eq!(a.transpose_apply(&z).unwrap(), d.transpose_apply(&z).unwrap());
    }

    #[test]
    fn transpose_swaps_forms() {
        let a = sample();
        assert_eq!(a.transpose().to_dense(), a.to_dense().transpose());
        assert_eq!(a.transpose().transpose(), a);
        assert!((a.density() - 4.0 / 6.0).abs() < 1e-15);
    }
}
