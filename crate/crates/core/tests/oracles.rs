//! The SVD-based reference quantities checked against oracles written
//! independently of the library: Gaussian elimination on the normal
//! equations and a two-sided Jacobi eigenvalue routine for `AᵀA`.

use drek_core::analysis::{bound_params, Spectrum};
use drek_core::problems::{gen_duplicated, gen_full_rank, gen_rank_deficient};
use drek_core::svd::{pinv_solve, split_range, svd};
use drek_core::{DenseMatrix, LinearOperator, RngStream};

fn mat(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
    (0..rows).map(|i| (0..cols).map(|j| f(i, j)).collect()).collect()
}

fn to_vecs(a: &DenseMatrix) -> Vec<Vec<f64>> {
    mat(a.rows(), a.cols(), |i, j| a[(i, j)])
}

fn mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let inner = b.len();
    mat(a.len(), b[0].len(), |i, j| (0..inner).map(|k| a[i][k] * b[k][j]).sum())
}

fn tr(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    mat(a[0].len(), a.len(), |i, j| a[j][i])
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Solves `M X = R` by Gaussian elimination with partial pivoting.
fn gauss_solve(mut m: Vec<Vec<f64>>, mut r: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = m.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        m.swap(c, piv);
        r.swap(c, piv);
        for i in c + 1..n {
            let f = m[i][c] / m[c][c];
            for k in c..n {
                m[i][k] -= f * m[c][k];
            }
            for k in 0..r[0].len() {
                r[i][k] -= f * r[c][k];
            }
        }
    }
    let p = r[0].len();
    let mut x = vec![vec![0.0; p]; n];
    for i in (0..n).rev() {
        for k in 0..p {
            let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j][k]).sum();
            x[i][k] = (r[i][k] - s) / m[i][i];
        }
    }
    x
}

/// Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi rotations.
fn sym_eigenvalues(mut s: Vec<Vec<f64>>) -> Vec<f64> {
    let n = s.len();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[i][j] * s[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if s[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (s[q][q] - s[p][p]) / (2.0 * s[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (a, b) = (s[k][p], s[k][q]);
                    s[k][p] = c * a - sn * b;
                    s[k][q] = sn * a + c * b;
                }
                for k in 0..n {
                    let (a, b) = (s[p][k], s[q][k]);
                    s[p][k] = c * a - sn * b;
                    s[q][k] = sn * a + c * b;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| s[i][i]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

#[test]
fn full_rank_solution_matches_normal_equations() {
    for seed in 0..10 {
        let p = gen_full_rank(12, 5, 3, 1e-2, seed).unwrap();
        let a = to_vecs(&p.a.to_dense());
        let at = tr(&a);
        let x = gauss_solve(mul(&at, &a), mul(&at, &to_vecs(&p.b)));
        let got = to_vecs(&p.x_star);
        let scale = x.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max_diff(&x, &got) <= 1e-10 * scale, "seed {seed}");
    }
}

#[test]
fn moore_penrose_conditions_on_random_instances() {
    let mut rng = RngStream::new(2024);
    for t in 0..20 {
        let (m, n) = (3 + (t * 13) % 48, 2 + (t * 7) % 49);
        let a = if t % 2 == 0 {
            rng.randn(m, n)
        } else {
            // Rank one less than full.
            let r = m.min(n).max(2) - 1;
            rng.randn(m, r).matmul(&rng.randn(r, n)).unwrap()
        };
        let f = svd(&a, None).unwrap();
        let pinv = to_vecs(&f.pinv());
        let av = to_vecs(&a);
        let scale = f.sigma_max().max(1.0);
        let inv_scale = 1.0 / f.singular_values[f.rank() - 1];
        let apa = mul(&mul(&av, &pinv), &av);
        assert!(max_diff(&apa, &av) <= 1e-9 * scale, "A A⁺ A, trial {t}");
        let pap = mul(&mul(&pinv, &av), &pinv);
        assert!(max_diff(&pap, &pinv) <= 1e-9 * inv_scale, "A⁺ A A⁺, trial {t}");
        let ap = mul(&av, &pinv);
        assert!(max_diff(&ap, &tr(&ap)) <= 1e-9, "(A A⁺)ᵀ, trial {t}");
        let pa = mul(&pinv, &av);
        assert!(max_diff(&pa, &tr(&pa)) <= 1e-9, "(A⁺ A)ᵀ, trial {t}");
    }
}

#[test]
fn minimal_norm_solution_of_duplicated_columns() {
    // [1, 1] x = 2 has minimal-norm solution (1, 1).
    let a = DenseMatrix::from_rows(&[[1.0, 1.0]]).unwrap();
    let b = DenseMatrix::from_rows(&[[2.0]]).unwrap();
    let x = pinv_solve(&a, &b).unwrap();
    assert!((x[(0, 0)] - 1.0).abs() < 1e-14 && (x[(1, 0)] - 1.0).abs() < 1e-14);
}

#[test]
fn extremal_eigenvalues_match_brute_force() {
    let mut rng = RngStream::new(77);
    for n in 1..=6 {
        let a = rng.randn(n + 3, n);
        let av = to_vecs(&a);
        let ev = sym_eigenvalues(mul(&tr(&av), &av));
        let s = Spectrum::of(&a).unwrap();
        assert!((s.lambda_max - ev[0]).abs() <= 1e-10 * ev[0]);
        assert!((s.lambda_min - ev[n - 1]).abs() <= 1e-9 * ev[0]);
        let params = bound_params(&a, 0.5, 0.0).unwrap();
        let delta = 1.0 - 0.25 * ev[n - 1] / a.frobenius_norm_sq();
        assert!((params.delta - delta).abs() <= 1e-12);
    }
}

#[test]
fn rank_deficient_spectrum_skips_zero_eigenvalues() {
    let p = gen_rank_deficient(9, 6, 1, 3, 0.0, 5).unwrap();
    let a = p.a.to_dense();
    let av = to_vecs(&a);
    let ev = sym_eigenvalues(mul(&tr(&av), &av));
    let s = Spectrum::of(&a).unwrap();
    assert!((s.lambda_min - ev[2]).abs() <= 1e-9 * ev[0]);
    assert!(ev[3].abs() <= 1e-9 * ev[0]);
}

#[test]
fn generated_problems_satisfy_split_invariants() {
    let problems = [
        gen_full_rank(50, 30, 30, 1e-5, 1).unwrap(),
        gen_full_rank(30, 50, 30, 1e-5, 2).unwrap(),
        gen_rank_deficient(50, 30, 30, 25, 1e-5, 3).unwrap(),
        gen_duplicated(30, 50, 30, 1e-5, 4).unwrap(),
    ];
    for p in &problems {
        let a = p.a.to_dense();
        let at_bperp = a.transpose_apply(&p.b_perp).unwrap();
        assert!(at_bperp.frobenius_norm() <= 1e-9 * a.frobenius_norm() * p.b.frobenius_norm());
        let rest = p.b.sub(&p.b_hat).unwrap().sub(&p.b_perp).unwrap();
        assert!(rest.frobenius_norm() <= 1e-12 * p.b.frobenius_norm());
        let (b_hat, b_perp) = split_range(&a, &p.b).unwrap();
        assert!(b_hat.max_abs_diff(&p.b_hat).unwrap() <= 1e-10 * p.b.frobenius_norm());
        assert!(b_perp.max_abs_diff(&p.b_perp).unwrap() <= 1e-10 * p.b.frobenius_norm());
    }
    // The orthogonal part of noisy data is about as large as the noise.
    let p = gen_full_rank(50, 30, 30, 1e-5, 1).unwrap();
    let ratio = p.b_perp.frobenius_norm() / p.b.frobenius_norm();
    assert!(ratio > 1e-8 && ratio < 1e-4, "noise ratio {ratio}");
}

#[test]
fn rank_deficient_generators_hit_their_ranks() {
    for (m, n, r) in [(30, 50, 25), (50, 30, 25), (60, 80, 40), (80, 60, 40), (80, 100, 50), (100, 80, 50)] {
        let g = gen_rank_deficient(m, n, 1, r, 1e-5, 9).unwrap();
        let f = svd(&g.a.to_dense(), None).unwrap();
        assert_eq!(f.rank(), r);
        assert!(f.singular_values[r] <= 1e-10 * f.sigma_max());
        let d = gen_duplicated(m, n, 1, 1e-5, 9).unwrap();
        assert_eq!(d.meta.rank, r, "{m}x{n}");
    }
}
