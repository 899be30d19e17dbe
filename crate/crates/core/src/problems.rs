//! Problem instances `AX = B` with their least-squares reference solution.

use alloc::string::{String, ToString};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::operator::{LinearOperator, SystemMatrix};
use crate::sampling::RngStream;
use crate::svd::{svd, SvdFactors};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemMeta {
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub rank: usize,
    pub density: f64,
    pub noise: f64,
    pub seed: u64,
}

impl ProblemMeta {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }
}

/// Coefficient matrix, right-hand side and the split
/// `B = B̂ + B⊥`, `B̂ = A X*`, `X* = A⁺B`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub a: SystemMatrix,
    pub b: DenseMatrix,
    pub x_star: DenseMatrix,
    pub b_hat: DenseMatrix,
    pub b_perp: DenseMatrix,
    pub meta: ProblemMeta,
}

impl Problem {
    /// Computes the reference quantities with the SVD oracle. `meta`'s
    /// shape, rank and density fields are overwritten.
    pub fn new(a: SystemMatrix, b: DenseMatrix, meta: ProblemMeta) -> Result<Self> {
        let dense = a.to_dense();
        let factors = svd(&dense, None)?;
        Self::with_factors(a, &dense, &factors, b, meta)
    }

    fn with_factors(
        a: SystemMatrix,
        dense: &DenseMatrix,
        factors: &SvdFactors,
        b: DenseMatrix,
        mut meta: ProblemMeta,
    ) -> Result<Self> {
        if b.rows() != a.nrows() {
            return Err(Error::DimensionMismatch {
                op: "problem",
                left: (a.nrows(), a.ncols()),
                right: b.shape(),
            });
        }
        let x_star = factors.solve(&b)?;
        let b_hat = dense.matmul(&x_star)?;
        let b_perp = b.sub(&b_hat)?;
        meta.m = a.nrows();
        meta.n = a.ncols();
        meta.p = b.cols();
        meta.rank = factors.rank();
        meta.density = a.density();
        Ok(Self {
            a,
            b,
            x_star,
            b_hat,
            b_perp,
            meta,
        })
    }

    /// `(m, n, p)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.meta.m, self.meta.n, self.meta.p)
    }

    /// Restricts the problem to column `k` of `B`.
    pub fn column(&self, k: usize) -> Result<Self> {
        let (m, _, p) = self.dims();
        if k >= p {
            return Err(Error::IndexOutOfBounds {
                row: 0,
                col: k,
                rows: m,
                cols: p,
            });
        }
        let col = |mat: &DenseMatrix| DenseMatrix::column(&mat.col(k));
        let mut meta = self.meta.clone();
        meta.p = 1;
        Ok(Self {
            a: self.a.clone(),
            b: col(&self.b)?,
            x_star: col(&self.x_star)?,
            b_hat: col(&self.b_hat)?,
            b_perp: col(&self.b_perp)?,
            meta,
        })
    }
}

fn check_dims(m: usize, n: usize, p: usize, noise: f64) -> Result<()> {
    if m == 0 || n == 0 || p == 0 {
        return Err(Error::InvalidParameter {
            name: "m/n/p",
            value: 0.0,
            reason: "dimensions must be positive",
        });
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::InvalidParameter {
            name: "noise",
            value: noise,
            reason: "noise level must be finite and non-negative",
        });
    }
    Ok(())
}

/// `B = A X_gen + μ R` with `X_gen`, `R` standard normal, drawn after `A`
/// from the same stream.
fn finish(a: SystemMatrix, p: usize, noise: f64, mut rng: RngStream, mut meta: ProblemMeta) -> Result<Problem> {
    let x_gen = rng.randn(a.ncols(), p);
    let r = rng.randn(a.nrows(), p);
    let mut b = a.apply(&x_gen)?;
    b.axpy(noise, &r)?;
    meta.noise = noise;
    meta.seed = rng.seed();
    Problem::new(a, b, meta)
}

/// `A = randn(m, n)`.
pub fn gen_full_rank(m: usize, n: usize, p: usize, noise: f64, seed: u64) -> Result<Problem> {
    check_dims(m, n, p, noise)?;
    let mut rng = RngStream::new(seed);
    let a = SystemMatrix::dense(rng.randn(m, n))?;
    finish(a, p, noise, rng, ProblemMeta::named("randn"))
}

/// `A = G H` with `G = randn(m, rank)`, `H = randn(rank, n)`: rank exactly
/// `rank` with probability one.
pub fn gen_rank_deficient(m: usize, n: usize, p: usize, rank: usize, noise: f64, seed: u64) -> Result<Problem> {
    check_dims(m, n, p, noise)?;
    if rank == 0 || rank > m.min(n) {
        return Err(Error::InvalidParameter {
            name: "rank",
            value: rank as f64,
            reason: "target rank must lie in 1..=min(m, n)",
        });
    }
    let mut rng = RngStream::new(seed);
    let g = rng.randn(m, rank);
    let h = rng.randn(rank, n);
    let a = SystemMatrix::dense(g.matmul(&h)?)?;
    finish(a, p, noise, rng, ProblemMeta::named("randn-lowrank"))
}

/// Duplicates a Gaussian half-block along the longer dimension:
/// `[A₀; A₀]` with `A₀ = randn(m/2, n)` when `m ≥ n`, otherwise `[A₀, A₀]`
/// with `A₀ = randn(m, n/2)`. The rank is `max(m, n) / 2` whenever that does
/// not exceed the shorter dimension.
pub fn gen_duplicated(m: usize, n: usize, p: usize, noise: f64, seed: u64) -> Result<Problem> {
    check_dims(m, n, p, noise)?;
    let long = m.max(n);
    if long % 2 != 0 {
        return Err(Error::InvalidParameter {
            name: "max(m, n)",
            value: long as f64,
            reason: "the duplicated dimension must be even",
        });
    }
    let mut rng = RngStream::new(seed);
    let a = if m >= n {
        let a0 = rng.randn(m / 2, n);
        a0.vstack(&a0)?
    } else {
        let a0 = rng.randn(m, n / 2);
        a0.hstack(&a0)?
    };
    let a = SystemMatrix::dense(a)?;
    finish(a, p, noise, rng, ProblemMeta::named("randn-duplicated"))
}

/// Right-hand side `B = A X + μ R` for a given coefficient matrix.
pub fn build_problem_from_matrix(
    a: SystemMatrix,
    p: usize,
    noise: f64,
    seed: u64,
    name: &str,
) -> Result<Problem> {
    check_dims(a.nrows(), a.ncols(), p, noise)?;
    finish(a, p, noise, RngStream::new(seed), ProblemMeta::named(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svd::svd;

    #[test]
    fn full_rank_consistent_recovers_generator() {
        let p1 = gen_full_rank(12, 5, 3, 0.0, 7).unwrap();
        assert!(p1.b_perp.frobenius_norm() <= 1e-12 * p1.b.frobenius_norm());
        // Regenerate X_gen from the same stream layout.
        let mut rng = RngStream::new(7);
        let _ = rng.randn(12, 5);
        let x_gen = rng.randn(5, 3);
        assert!(p1.x_star.max_abs_diff(&x_gen).unwrap() < 1e-10);
        assert_eq!(p1.meta.rank, 5);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_full_rank(8, 6, 2, 1e-5, 3).unwrap();
        let b = gen_full_rank(8, 6, 2, 1e-5, 3).unwrap();
        assert_eq!(a.b, b.b);
        assert_eq!(a.a, b.a);
        let c = gen_rank_deficient(8, 6, 2, 3, 1e-5, 3).unwrap();
        let d = gen_rank_deficient(8, 6, 2, 3, 1e-5, 3).unwrap();
        assert_eq!(c.b, d.b);
    }

    #[test]
    fn rank_deficient_hits_target_rank() {
        let p = gen_rank_deficient(50, 30, 4, 25, 1e-5, 11).unwrap();
        assert_eq!(p.meta.rank, 25);
        let f = svd(&p.a.to_dense(), None).unwrap();
        assert!(f.singular_values[25] <= 1e-10 * f.sigma_max());
    }

    #[test]
    fn duplicated_ranks_match_long_side_halves() {
        for (m, n, rank) in [(30, 50, 25), (50, 30, 25), (60, 80, 40), (80, 60, 40)] {
            let p = gen_duplicated(m, n, 2, 1e-5, 1).unwrap();
            assert_eq!((p.meta.m, p.meta.n, p.meta.rank), (m, n, rank));
        }
        assert!(gen_duplicated(31, 20, 1, 0.0, 0).is_err());
    }

    #[test]
    fn invalid_generator_arguments() {
        assert!(gen_full_rank(0, 3, 1, 0.0, 0).is_err());
        assert!(gen_full_rank(3, 3, 1, -1.0, 0).is_err());
        assert!(gen_rank_deficient(5, 4, 1, 5, 0.0, 0).is_err());
    }

    #[test]
    fn split_invariants_hold() {
        let p = gen_full_rank(20, 10, 4, 1e-2, 5).unwrap();
        let a = p.a.to_dense();
        let at_bperp = a.transpose_apply(&p.b_perp).unwrap();
        assert!(at_bperp.frobenius_norm() <= 1e-9 * a.frobenius_norm() * p.b.frobenius_norm());
        let recomposed = p.b_hat.add(&p.b_perp).unwrap();
        assert!(recomposed.sub(&p.b).unwrap().frobenius_norm() <= 1e-12 * p.b.frobenius_norm());
    }
}
