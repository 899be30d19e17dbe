//! One-sided (Hestenes) Jacobi SVD and the minimal-norm least-squares
//! reference built on it.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U Σ Vᵀ` with `k = min(m, n)` singular triplets.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// m×k, orthonormal columns for every nonzero singular value.
    pub u: DenseMatrix,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    /// n×k, orthonormal columns.
    pub v: DenseMatrix,
    /// Singular values at or below this are treated as zero.
    pub tolerance: f64,
}

impl SvdFactors {
    /// Number of singular values strictly above the tolerance.
    pub fn rank(&self) -> usize {
        self.singular_values
            .iter()
            .take_while(|&&s| s > self.tolerance)
            .count()
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue of `AᵀA`.
    pub fn lambda_max(&self) -> f64 {
        let s = self.sigma_max();
        s * s
    }

    /// Smallest nonzero eigenvalue of `AᵀA`, or `None` for a numerically zero matrix.
    pub fn lambda_min_nonzero(&self) -> Option<f64> {
        match self.rank() {
            0 => None,
            r => {
                let s = self.singular_values[r - 1];
                Some(s * s)
            }
        }
    }

    /// Ratio of the extremal nonzero singular values.
    pub fn condition_number(&self) -> Option<f64> {
        match self.rank() {
            0 => None,
            r => Some(self.singular_values[0] / self.singular_values[r - 1]),
        }
    }

    /// `U Σ Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, k) = self.u.shape();
        let n = self.v.rows();
        DenseMatrix::from_fn(m, n, |i, j| {
            (0..k)
                .map(|t| self.u[(i, t)] * self.singular_values[t] * self.v[(j, t)])
                .sum()
        })
    }

    /// Moore–Penrose pseudoinverse `V Σ⁺ Uᵀ` (n×m).
    pub fn pinv(&self) -> DenseMatrix {
        let r = self.rank();
        let m = self.u.rows();
        let n = self.v.rows();
        DenseMatrix::from_fn(n, m, |i, j| {
            (0..r)
                .map(|t| self.v[(i, t)] * self.u[(j, t)] / self.singular_values[t])
                .sum()
        })
    }

    /// `A⁺ B` computed as `V (Σ⁺ (Uᵀ B))`.
    pub fn solve(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.rows() != self.u.rows() {
            return Err(Error::DimensionMismatch {
                op: "pinv_solve",
                left: self.u.shape(),
                right: b.shape(),
            });
        }
        let r = self.rank();
        let p = b.cols();
        let mut coeff = DenseMatrix::zeros(r, p);
        for t in 0..r {
            let inv = 1.0 / self.singular_values[t];
            for i in 0..self.u.rows() {
                let u = self.u[(i, t)] * inv;
                if u == 0.0 {
                    continue;
                }
                for (c, bv) in coeff.row_mut(t).iter_mut().zip(b.row(i)) {
                    *c += u * bv;
                }
            }
        }
        let n = self.v.rows();
        let mut x = DenseMatrix::zeros(n, p);
        for i in 0..n {
            for t in 0..r {
                let v = self.v[(i, t)];
                for (xv, c) in x.row_mut(i).iter_mut().zip(coeff.row(t)) {
                    *xv += v * c;
                }
            }
        }
        Ok(x)
    }

    /// Orthogonal projector onto `range(Aᵀ)`, i.e. `A⁺A = V_r V_rᵀ` (n×n).
    pub fn row_space_projector(&self) -> DenseMatrix {
        let r = self.rank();
        let n = self.v.rows();
        DenseMatrix::from_fn(n, n, |i, j| (0..r).map(|t| self.v[(i, t)] * self.v[(j, t)]).sum())
    }

    /// Orthogonal projector onto `range(A)`, i.e. `AA⁺ = U_r U_rᵀ` (m×m).
    pub fn column_space_projector(&self) -> DenseMatrix {
        let r = self.rank();
        let m = self.u.rows();
        DenseMatrix::from_fn(m, m, |i, j| (0..r).map(|t| self.u[(i, t)] * self.u[(j, t)]).sum())
    }
}

/// Default numerical-rank tolerance `max(m, n) · ε · σ_max`.
pub fn default_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Thin SVD of `a`. `tol = None` selects [`default_tolerance`].
pub fn svd(a: &DenseMatrix, tol: Option<f64>) -> Result<SvdFactors> {
    if let Some(t) = tol {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol",
                value: t,
                reason: "rank tolerance must be non-negative",
            });
        }
    }
    let (m, n) = a.shape();
    let (u, s, v) = if m >= n {
        jacobi_tall(a)?
    } else {
        let (u, s, v) = jacobi_tall(&a.transpose())?;
        (v, s, u)
    };
    let tolerance = tol.unwrap_or_else(|| default_tolerance(m, n, s.first().copied().unwrap_or(0.0)));
    Ok(SvdFactors {
        u,
        singular_values: s,
        v,
        tolerance,
    })
}

/// One-sided Jacobi on a matrix with `m ≥ n`. Columns are orthogonalized
/// in place; the rotations accumulate into `V`.
fn jacobi_tall(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let (m, n) = a.shape();
    // Column-major working copies so each column is contiguous.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let eps = f64::EPSILON;
    // Pairs count as orthogonal once the cosine drops below this.
    let tol = libm::sqrt(m as f64) * eps;
    // A column at the rounding level of its partner cannot be
    // orthogonalized against it; rotating such a pair never settles.
    let floor = 16.0 * eps * eps;
    // Columns this small are numerical zeros of the whole matrix.
    let fro_sq: f64 = w.iter().flatten().map(|x| x * x).sum();
    let zero = eps * eps * fro_sq;
    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::SvdNoConvergence { sweeps });
        }
        sweeps += 1;
        converged = true;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha: f64 = w[p].iter().map(|x| x * x).sum();
                let beta: f64 = w[q].iter().map(|x| x * x).sum();
                let gamma: f64 = w[p].iter().zip(&w[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0
                    || alpha.min(beta) <= zero
                    || alpha.min(beta) <= floor * alpha.max(beta)
                    || libm::fabs(gamma) <= tol * libm::sqrt(alpha * beta)
                {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                let (lo, hi) = w.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
            }
        }
    }

    let mut sigma: Vec<(f64, usize)> = w
        .iter()
        .enumerate()
        .map(|(j, col)| (libm::sqrt(col.iter().map(|x| x * x).sum::<f64>()), j))
        .collect();
    sigma.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut u = DenseMatrix::zeros(m, n);
    let mut vm = DenseMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (t, &(sv, j)) in sigma.iter().enumerate() {
        s.push(sv);
        if sv > 0.0 {
            for i in 0..m {
                u[(i, t)] = w[j][i] / sv;
            }
        }
        for i in 0..n {
            vm[(i, t)] = v[j][i];
        }
    }
    Ok((u, s, vm))
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Minimal Frobenius-norm least-squares solution `X* = A⁺B`.
pub fn pinv_solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    svd(a, None)?.solve(b)
}

/// Splits `B = B̂ + B⊥` with `B̂ = A A⁺ B ∈ range(A)` and `AᵀB⊥ = 0`.
pub fn split_range(a: &DenseMatrix, b: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let x = pinv_solve(a, b)?;
    let b_hat = a.matmul(&x)?;
    let b_perp = b.sub(&b_hat)?;
    Ok((b_hat, b_perp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let f = svd(&DenseMatrix::identity(4), None).unwrap();
        assert_eq!(f.singular_values, vec![1.0; 4]);
        assert_eq!(f.rank(), 4);
    }

    #[test]
    fn diagonal_with_zero() {
        let f = svd(&m(&[&[3.0, 0.0], &[0.0, 0.0]]), None).unwrap();
        assert_eq!(f.singular_values, vec![3.0, 0.0]);
        assert_eq!(f.rank(), 1);
        assert_eq!(f.lambda_min_nonzero(), Some(9.0));
    }

    #[test]
    fn duplicated_columns_keep_rank() {
        let a0 = m(&[&[1.0, 2.0], &[0.5, -1.0], &[3.0, 0.0], &[1.0, 1.0]]);
        let a = a0.hstack(&a0).unwrap();
        assert_eq!(svd(&a, None).unwrap().rank(), svd(&a0, None).unwrap().rank());
        assert_eq!(svd(&a, None).unwrap().rank(), 2);
    }

    #[test]
    fn wide_and_tall_reconstruct() {
        let a = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.5]]);
        for mat in [a.clone(), a.transpose()] {
            let f = svd(&mat, None).unwrap();
            let err = f.reconstruct().sub(&mat).unwrap().frobenius_norm();
            assert!(err <= 1e-12 * mat.frobenius_norm());
        }
    }

    #[test]
    fn minimal_norm_single_equation() {
        let x = pinv_solve(&m(&[&[1.0, 1.0]]), &m(&[&[2.0]])).unwrap();
        assert!(x.max_abs_diff(&m(&[&[1.0], &[1.0]])).unwrap() < 1e-14);
    }

    #[test]
    fn pinv_of_identity() {
        let b = m(&[&[1.0, -2.0], &[3.0, 4.0], &[0.5, 0.25]]);
        let x = pinv_solve(&DenseMatrix::identity(3), &b).unwrap();
        assert!(x.max_abs_diff(&b).unwrap() < 1e-15);
    }

    #[test]
    fn split_consistent_and_orthogonal_cases() {
        let a = m(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let b = a.matmul(&m(&[&[2.0], &[-1.0]])).unwrap();
        let (b_hat, b_perp) = split_range(&a, &b).unwrap();
        assert!(b_perp.frobenius_norm() < 1e-14);
        assert!(b_hat.max_abs_diff(&b).unwrap() < 1e-14);

        // (1, 1, -1) spans null(Aᵀ).
        let b = m(&[&[1.0], &[1.0], &[-1.0]]);
        let (b_hat, b_perp) = split_range(&a, &b).unwrap();
        assert!(b_hat.frobenius_norm() < 1e-14);
        assert!(b_perp.max_abs_diff(&b).unwrap() < 1e-14);
    }

    #[test]
    fn split_matches_projector() {
        let a = m(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let b = m(&[&[3.0, -1.0], &[2.0, 5.0]]);
        let (b_hat, b_perp) = split_range(&a, &b).unwrap();
        let proj = svd(&a, None).unwrap().column_space_projector();
        assert!(b_hat.max_abs_diff(&proj.matmul(&b).unwrap()).unwrap() < 1e-15);
        assert!(b_hat.max_abs_diff(&m(&[&[3.0, -1.0], &[0.0, 0.0]])).unwrap() < 1e-15);
        assert!(b_perp.max_abs_diff(&m(&[&[0.0, 0.0], &[2.0, 5.0]])).unwrap() < 1e-15);
    }

    #[test]
    fn negative_tolerance_rejected() {
        assert!(svd(&DenseMatrix::identity(2), Some(-1.0)).is_err());
    }
}
