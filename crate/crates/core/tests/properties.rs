use drek_core::analysis::{
    beta1_from_alpha1, bound_params_from_spectrum, recursion_bound, recursion_q, RecursionSpec, Spectrum,
};
use drek_core::svd::split_range;
use drek_core::{DenseMatrix, DualSparseMatrix, RngStream};
use proptest::prelude::*;

fn dense(max: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0f64..10.0, r * c).prop_map(move |d| DenseMatrix::new(r, c, d).unwrap())
    })
}

fn feasible_spec() -> impl Strategy<Value = RecursionSpec> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..10.0, 0.0f64..1.0).prop_map(|(s, frac, a3, f0, scale)| {
        // a₁ + a₂ = s·0.999 + 1e-6 keeps the sum strictly inside (0, 1).
        let total = s * 0.999 + 1e-6;
        RecursionSpec {
            a1: total * frac,
            a2: total * (1.0 - frac),
            a3: a3 * scale,
            f0,
        }
    })
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #[test]
    fn norm_sums_agree(m in dense(12)) {
        let rows: f64 = m.row_sq_norms().iter().sum();
        let cols: f64 = m.col_sq_norms().iter().sum();
        let fro = m.frobenius_norm_sq();
        prop_assert!(rel_close(rows, fro, 1e-12));
        prop_assert!(rel_close(cols, fro, 1e-12));
    }

    #[test]
    fn sparse_forms_densify_identically(m in dense(10), mask in prop::collection::vec(any::<bool>(), 100)) {
        // Sparsify while keeping one entry in every row and column.
        let (r, c) = m.shape();
        let d = DenseMatrix::from_fn(r, c, |i, j| {
            let keep = i == j % r || j == i % c || mask[i * 10 + j];
            if keep { m[(i, j)] + 20.0 } else { 0.0 }
        });
        let s = DualSparseMatrix::from_dense(&d).unwrap();
        let from_rows = s.to_dense();
        prop_assert_eq!(from_rows.data(), d.data());
        let from_cols = s.to_dense_from_cols();
        prop_assert_eq!(from_cols.data(), d.data());
        let again = DualSparseMatrix::from_triplets(r, c, &s.triplets()).unwrap();
        prop_assert_eq!(again, s);
    }

    #[test]
    fn split_is_exact_and_orthogonal(a in dense(8), seed in any::<u64>(), p in 1usize..4) {
        prop_assume!(a.frobenius_norm_sq() > 0.0);
        let b = RngStream::new(seed).randn(a.rows(), p);
        let (b_hat, b_perp) = split_range(&a, &b).unwrap();
        let rest = b.sub(&b_hat).unwrap().sub(&b_perp).unwrap();
        prop_assert!(rest.frobenius_norm() <= 1e-12 * b.frobenius_norm());
        let inner = b_hat.frobenius_inner(&b_perp).unwrap().abs();
        let (nb, nh, np) = (b.frobenius_norm(), b_hat.frobenius_norm(), b_perp.frobenius_norm());
        if np > 1e-8 * nb {
            prop_assert!(inner <= 1e-9 * nh * np);
        } else {
            // Consistent data: B⊥ is rounding noise and only its size is meaningful.
            prop_assert!(inner <= 1e-12 * nb * nb);
        }
    }

    #[test]
    fn recursion_eps_identity(spec in feasible_spec()) {
        let (q, eps) = recursion_q(&spec).unwrap();
        prop_assert!(rel_close((spec.a1 + eps) * eps, spec.a2, 1e-12) || spec.a2 == 0.0 && eps == 0.0);
        prop_assert!(q >= spec.a1 && q < 1.0);
    }

    #[test]
    fn q_is_monotone(spec in feasible_spec(), bump in 0.0f64..1.0) {
        let room = (1.0 - spec.a1 - spec.a2) * 0.999;
        let (q, _) = recursion_q(&spec).unwrap();
        let up1 = RecursionSpec { a1: spec.a1 + bump * room, ..spec };
        let up2 = RecursionSpec { a2: spec.a2 + bump * room, ..spec };
        prop_assert!(recursion_q(&up1).unwrap().0 >= q);
        prop_assert!(recursion_q(&up2).unwrap().0 >= q);
    }

    #[test]
    fn recursion_bound_dominates_simulation(spec in feasible_spec()) {
        let (mut prev, mut cur) = (spec.f0, spec.f0);
        for k in 1..=200 {
            let bound = recursion_bound(&spec, k).unwrap();
            prop_assert!(cur <= bound * (1.0 + 1e-12) + 1e-300, "k={} F={} bound={}", k, cur, bound);
            let next = spec.a1 * cur + spec.a2 * prev + spec.a3;
            prev = cur;
            cur = next;
        }
    }

    #[test]
    fn zero_momentum_gives_delta(lmin in 1e-3f64..1.0, spread in 1.0f64..50.0, extra in 0.0f64..100.0, alpha1 in 0.05f64..0.95) {
        let lmax = lmin * spread;
        let spectrum = Spectrum { lambda_min: lmin, lambda_max: lmax, frobenius_sq: lmax + lmin + extra, rows: 4, cols: 3 };
        let p = bound_params_from_spectrum(spectrum, alpha1, 0.0).unwrap();
        prop_assert_eq!(p.q, Some(p.delta));
        prop_assert_eq!(p.xi, Some(0.0));
    }

    #[test]
    fn gamma_max_is_feasibility_boundary(lmin in 1e-3f64..1.0, extra in 0.0f64..100.0, alpha1 in 0.05f64..0.95) {
        let spectrum = Spectrum { lambda_min: lmin, lambda_max: lmin, frobenius_sq: lmin + extra, rows: 4, cols: 3 };
        let p = bound_params_from_spectrum(spectrum, alpha1, 0.0).unwrap();
        prop_assert!(p.delta > 0.0 && p.delta < 1.0);
        prop_assert!(p.gamma_max > 0.0);
        let at = bound_params_from_spectrum(spectrum, alpha1, p.gamma_max).unwrap();
        prop_assert!((at.eta1 + at.eta2 - 1.0).abs() <= 1e-10);
        prop_assert!(!at.in_range());
        let below = bound_params_from_spectrum(spectrum, alpha1, p.gamma_max * 0.999).unwrap();
        prop_assert!(below.q.unwrap() < 1.0);
    }
}

fn positive(rng: &mut RngStream) -> f64 {
    // Strictly positive, spread over several decades.
    (4.0 * rng.standard_normal()).exp()
}

#[test]
fn sum_of_squares_inequalities_fuzz() {
    let mut rng = RngStream::new(11);
    let mut violations = 0;
    for _ in 0..10_000 {
        let m = 1 + (rng.next_u64() % 20) as usize;
        let x: Vec<f64> = (0..m).map(|_| rng.standard_normal().abs() * 3.0).collect();
        let y: Vec<f64> = (0..m).map(|_| positive(&mut rng)).collect();
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let weighted: f64 = x.iter().zip(&y).map(|(a, b)| a * a / b).sum();
        let squares: f64 = x.iter().map(|a| a * a).sum();
        if weighted < sx * sx / sy * (1.0 - 1e-12) || squares < sx * sx / m as f64 * (1.0 - 1e-12) {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn split_norm_inequality_fuzz() {
    let mut rng = RngStream::new(12);
    let mut violations = 0;
    for t in 0..10_000 {
        let alpha1 = 0.01 + 0.98 * (t % 99) as f64 / 98.0;
        let beta1 = beta1_from_alpha1(alpha1).unwrap();
        let (r, c) = (1 + (rng.next_u64() % 6) as usize, 1 + (rng.next_u64() % 6) as usize);
        let x = rng.randn(r, c);
        let y = rng.randn(r, c).scale(positive(&mut rng));
        let lhs = x.add(&y).unwrap().frobenius_norm_sq();
        let rhs = alpha1 * x.frobenius_norm_sq() - beta1 * y.frobenius_norm_sq();
        if lhs < rhs - 1e-12 * (x.frobenius_norm_sq() + y.frobenius_norm_sq()) {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}
