//! Monte-Carlo means of `‖Z⁽ᵏ⁾ − B⊥‖²_F` and `‖X⁽ᵏ⁾ − X*‖²_F`.

use drek_core::analysis::{EnvelopeKind, ErrorSeries};
use drek_core::sampling::derive_seed;
use drek_core::{LinearOperator, Method, Problem, SolverConfig, SolverState};
use rayon::prelude::*;

/// Mean error series over `runs` independent runs of `method` from
/// `X⁽⁰⁾ = 0`, evaluated at `checkpoints`.
///
/// Runs are seeded with `derive_seed(base_seed, "monte-carlo", run)` and
/// reduced in run order, so the result does not depend on thread scheduling.
pub fn error_means(
    problem: &Problem,
    method: Method,
    gamma: f64,
    checkpoints: &[usize],
    runs: usize,
    base_seed: u64,
) -> drek_core::Result<(ErrorSeries, ErrorSeries)> {
    let mut ks: Vec<usize> = checkpoints.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let last = ks.last().copied().unwrap_or(0);

    let per_run: Vec<Vec<(f64, f64)>> = (0..runs as u64)
        .into_par_iter()
        .map(|run| {
            let config = SolverConfig {
                gamma,
                seed: derive_seed(base_seed, "monte-carlo", run),
                max_iterations: last.max(1),
                ..SolverConfig::default()
            };
            let mut state = SolverState::new(&problem.a, &problem.b, method, &config)?;
            let mut out = Vec::with_capacity(ks.len());
            let mut next = 0;
            for k in 0..=last {
                if k > 0 {
                    state.step()?;
                }
                if next < ks.len() && ks[next] == k {
                    out.push((
                        state.z().dist_sq(&problem.b_perp)?,
                        state.x().dist_sq(&problem.x_star)?,
                    ));
                    next += 1;
                }
            }
            Ok(out)
        })
        .collect::<drek_core::Result<_>>()?;

    let mut z_sum = vec![0.0; ks.len()];
    let mut x_sum = vec![0.0; ks.len()];
    for run in &per_run {
        for (t, &(z, x)) in run.iter().enumerate() {
            z_sum[t] += z;
            x_sum[t] += x;
        }
    }
    let scale = 1.0 / runs.max(1) as f64;
    let norm_xstar_sq = problem.x_star.frobenius_norm_sq();
    let dims = (problem.a.nrows(), problem.a.ncols());
    let series = |kind, sums: &[f64]| ErrorSeries {
        kind,
        dims,
        runs,
        points: ks.iter().zip(sums).map(|(&k, s)| (k, s * scale)).collect(),
        // X⁽⁰⁾ = 0.
        norm_x0_err_sq: norm_xstar_sq,
        norm_xstar_sq,
    };
    Ok((
        series(EnvelopeKind::ZResidual, &z_sum),
        series(EnvelopeKind::SolutionError, &x_sum),
    ))
}
