//! Experiment commands: repeated runs, momentum grid search, envelope checks
//! and convergence curves. Every command writes its files into the configured
//! output directory and returns the same data in memory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use drek_core::analysis::{
    best_alpha1, bound_params, verify_trace_against_bound, x_error_bound, x_error_bound_fixed_a3, z_bound,
    BoundParams, EnvelopeReport,
};
use drek_core::problems::{build_problem_from_matrix, gen_duplicated, gen_full_rank, gen_rank_deficient};
use drek_core::sampling::derive_seed;
use drek_core::solver::{relative_solution_error, run_method, run_rekdr_vector, Checkpoint, Clock, WallClock};
use drek_core::{LinearOperator, Method, Problem, SolverConfig, SolverState, SystemMatrix};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, MethodName, ProblemKind, ProblemSpec};
use crate::montecarlo;
use crate::mtx::load_matrix_market;

/// Reals in CSV files: 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Per-run seed, stable under reordering of the method list.
pub fn trial_seed(base: u64, method: MethodName, trial: usize) -> u64 {
    derive_seed(base, method.as_str(), trial as u64)
}

pub fn build_problem(spec: &ProblemSpec, seed: u64) -> anyhow::Result<Problem> {
    let problem = match spec.kind {
        ProblemKind::Randn => gen_full_rank(spec.m, spec.n, spec.p, spec.noise, seed)?,
        ProblemKind::RankDeficient => {
            let rank = spec.rank.context("problem.rank is required")?;
            gen_rank_deficient(spec.m, spec.n, spec.p, rank, spec.noise, seed)?
        }
        ProblemKind::Duplicated => gen_duplicated(spec.m, spec.n, spec.p, spec.noise, seed)?,
        ProblemKind::Mtx => {
            let path = spec.path.as_ref().context("problem.path is required")?;
            let a = load_matrix_market(path).with_context(|| format!("loading {}", path.display()))?;
            let a = if spec.transpose { a.transpose() } else { a };
            let mut name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "mtx".into());
            if spec.transpose {
                name.push_str("^T");
            }
            build_problem_from_matrix(SystemMatrix::sparse(a), spec.p, spec.noise, seed, &name)?
        }
    };
    Ok(problem)
}

/// One row of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub method: MethodName,
    pub trial: usize,
    pub seed: u64,
    /// `None` when the run failed.
    pub iterations: Option<usize>,
    pub final_rse: Option<f64>,
    pub elapsed: f64,
    /// `converged`, `iteration-cap`, `degenerate`, or `error: …`.
    pub status: String,
}

#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub record: RunRecord,
    pub checkpoints: Vec<Checkpoint>,
}

/// Runs one method once with the given solver settings.
pub fn run_trial(problem: &Problem, method: MethodName, config: &SolverConfig, trial: usize) -> TrialOutput {
    let clock = WallClock::start();
    let result = match method {
        MethodName::Drek => run_method(problem, Method::Drek, config, &clock).map(|o| o.trace),
        MethodName::Mdrek => run_method(problem, Method::Mdrek, config, &clock).map(|o| o.trace),
        MethodName::RekBaseline => run_method(problem, Method::RekBaseline, config, &clock).map(|o| o.trace),
        MethodName::Rekdr => {
            if problem.b.cols() != 1 {
                Err(drek_core::Error::InvalidParameter {
                    name: "p",
                    value: problem.b.cols() as f64,
                    reason: "rekdr needs a single right-hand side",
                })
            } else {
                run_rekdr_vector(&problem.a, problem.b.data(), problem.x_star.data(), config, &clock, false)
                    .map(|o| o.trace)
            }
        }
    };
    let elapsed = clock.elapsed_secs();
    match result {
        Ok(trace) => TrialOutput {
            record: RunRecord {
                method,
                trial,
                seed: config.seed,
                iterations: Some(trace.iterations()),
                final_rse: Some(trace.final_rse()),
                elapsed,
                status: trace.status.as_str().to_string(),
            },
            checkpoints: trace.checkpoints,
        },
        Err(e) => TrialOutput {
            record: RunRecord {
                method,
                trial,
                seed: config.seed,
                iterations: None,
                final_rse: None,
                elapsed,
                status: format!("error: {e}"),
            },
            checkpoints: Vec::new(),
        },
    }
}

/// All `methods × repetitions` trials, in method-then-trial order.
pub fn run_trials(config: &ExperimentConfig, problem: &Problem) -> Vec<TrialOutput> {
    let jobs: Vec<(MethodName, usize)> = config
        .methods
        .iter()
        .flat_map(|&m| (0..config.repetitions).map(move |t| (m, t)))
        .collect();
    jobs.par_iter()
        .map(|&(method, trial)| {
            let solver = config.solver_config(config.gamma_for(method), trial_seed(config.seed, method, trial));
            run_trial(problem, method, &solver, trial)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: MethodName,
    pub gamma: f64,
    pub runs: usize,
    pub failed: usize,
    pub converged: usize,
    /// Means over the runs that did not fail.
    pub mean_iterations: f64,
    pub mean_elapsed: f64,
    pub mean_final_rse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSummary {
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub rank: usize,
    pub density: f64,
    pub noise: f64,
    pub seed: u64,
}

impl From<&Problem> for ProblemSummary {
    fn from(p: &Problem) -> Self {
        let meta = &p.meta;
        Self {
            name: meta.name.clone(),
            m: meta.m,
            n: meta.n,
            p: meta.p,
            rank: meta.rank,
            density: meta.density,
            noise: meta.noise,
            seed: meta.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub problem: ProblemSummary,
    pub methods: Vec<MethodSummary>,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

impl RunReport {
    pub fn summary(&self, method: MethodName) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == method)
    }
}

pub fn summarize(config: &ExperimentConfig, records: &[RunRecord]) -> Vec<MethodSummary> {
    config
        .methods
        .iter()
        .map(|&method| {
            let rows: Vec<&RunRecord> = records.iter().filter(|r| r.method == method).collect();
            let ok: Vec<&&RunRecord> = rows.iter().filter(|r| r.iterations.is_some()).collect();
            let mean = |f: &dyn Fn(&RunRecord) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            MethodSummary {
                method,
                gamma: config.gamma_for(method),
                runs: rows.len(),
                failed: rows.len() - ok.len(),
                converged: rows.iter().filter(|r| r.status == "converged").count(),
                mean_iterations: mean(&|r| r.iterations.unwrap_or(0) as f64),
                mean_elapsed: mean(&|r| r.elapsed),
                mean_final_rse: mean(&|r| r.final_rse.unwrap_or(f64::NAN)),
            }
        })
        .collect()
}

fn out_dir(config: &ExperimentConfig) -> anyhow::Result<&Path> {
    let dir = config.out_dir.as_path();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn opt_real(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

/// Runs every configured method `repetitions` times and writes `runs.csv`,
/// `traces.csv` and `summary.json`.
pub fn cmd_run(config: &ExperimentConfig) -> anyhow::Result<RunReport> {
    let problem = build_problem(&config.problem, config.problem_seed())?;
    let trials = run_trials(config, &problem);
    let dir = out_dir(config)?;

    write_rows(
        &dir.join("runs.csv"),
        &["method", "trial", "seed", "iterations", "final_rse", "elapsed", "status"],
        trials.iter().map(|t| {
            let r = &t.record;
            vec![
                r.method.to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                r.iterations.map(|k| k.to_string()).unwrap_or_default(),
                opt_real(r.final_rse),
                fmt_real(r.elapsed),
                r.status.clone(),
            ]
        }),
    )?;
    write_rows(
        &dir.join("traces.csv"),
        &["method", "trial", "iteration", "rse", "elapsed"],
        trials.iter().flat_map(|t| {
            t.checkpoints.iter().map(move |c| {
                vec![
                    t.record.method.to_string(),
                    t.record.trial.to_string(),
                    c.iteration.to_string(),
                    fmt_real(c.rse),
                    fmt_real(c.elapsed),
                ]
            })
        }),
    )?;

    let records: Vec<RunRecord> = trials.into_iter().map(|t| t.record).collect();
    let report = RunReport {
        problem: ProblemSummary::from(&problem),
        methods: summarize(config, &records),
        records,
    };
    write_json(&dir.join("summary.json"), &report)?;
    Ok(report)
}

/// Text table of mean iterations and elapsed seconds per method.
pub fn format_table(report: &RunReport) -> String {
    let p = &report.problem;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} {}x{} p={} rank={} density={:.4}",
        p.name, p.m, p.n, p.p, p.rank, p.density
    );
    let _ = writeln!(
        s,
        "{:<14} {:>6} {:>12} {:>12} {:>12} {:>10}",
        "method", "gamma", "IT", "CPU(s)", "RSE", "converged"
    );
    for m in &report.methods {
        let _ = writeln!(
            s,
            "{:<14} {:>6.2} {:>12.1} {:>12.4} {:>12.3e} {:>7}/{}",
            m.method.as_str(),
            m.gamma,
            m.mean_iterations,
            m.mean_elapsed,
            m.mean_final_rse,
            m.converged,
            m.runs
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub gamma: f64,
    pub mean_final_rse: f64,
    /// Mean first iteration with RSE at or below the tolerance; runs that
    /// never get there count as the full budget.
    pub mean_iterations: f64,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridReport {
    pub rows: Vec<GridRow>,
    pub best_gamma: f64,
}

/// One momentum run over a fixed budget: `(final RSE, iterations to tolerance)`.
pub fn grid_trial(problem: &Problem, config: &SolverConfig, budget: usize) -> drek_core::Result<(f64, usize)> {
    let method = if config.gamma == 0.0 { Method::Drek } else { Method::Mdrek };
    let mut state = SolverState::new(&problem.a, &problem.b, method, config)?;
    let mut reached = None;
    if relative_solution_error(state.x(), &problem.x_star)? <= config.rse_tolerance {
        reached = Some(0);
    }
    for k in 1..=budget {
        state.step()?;
        if reached.is_none() && relative_solution_error(state.x(), &problem.x_star)? <= config.rse_tolerance {
            reached = Some(k);
        }
    }
    Ok((relative_solution_error(state.x(), &problem.x_star)?, reached.unwrap_or(budget)))
}

/// Momentum sweep. Every grid point reuses the `mdrek` trial seeds, so the
/// `γ = 0` row is DREK under the same streams.
pub fn cmd_grid_search(config: &ExperimentConfig) -> anyhow::Result<GridReport> {
    let Some(grid) = &config.grid else {
        bail!("grid-search needs a [grid] section");
    };
    let problem = build_problem(&config.problem, config.problem_seed())?;
    let points = grid.points();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|g| (0..config.repetitions).map(move |t| (g, t)))
        .collect();
    let results: Vec<drek_core::Result<(f64, usize)>> = jobs
        .par_iter()
        .map(|&(g, t)| {
            let solver = config.solver_config(points[g], trial_seed(config.seed, MethodName::Mdrek, t));
            grid_trial(&problem, &solver, grid.budget)
        })
        .collect();

    let mut rows = Vec::with_capacity(points.len());
    for (g, &gamma) in points.iter().enumerate() {
        let chunk = &results[g * config.repetitions..(g + 1) * config.repetitions];
        let ok: Vec<(f64, usize)> = chunk.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
        let n = ok.len() as f64;
        rows.push(GridRow {
            gamma,
            mean_final_rse: if ok.is_empty() { f64::NAN } else { ok.iter().map(|r| r.0).sum::<f64>() / n },
            mean_iterations: if ok.is_empty() { f64::NAN } else { ok.iter().map(|r| r.1 as f64).sum::<f64>() / n },
            failed: chunk.len() - ok.len(),
        });
    }
    let best_gamma = rows
        .iter()
        .filter(|r| r.mean_final_rse.is_finite())
        .min_by(|a, b| a.mean_final_rse.total_cmp(&b.mean_final_rse))
        .map(|r| r.gamma)
        .context("every grid run failed")?;

    let dir = out_dir(config)?;
    write_rows(
        &dir.join("grid.csv"),
        &["gamma", "mean_final_rse", "mean_iterations", "failed"],
        rows.iter().map(|r| {
            vec![
                fmt_real(r.gamma),
                fmt_real(r.mean_final_rse),
                fmt_real(r.mean_iterations),
                r.failed.to_string(),
            ]
        }),
    )?;
    Ok(GridReport { rows, best_gamma })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsRecord {
    pub alpha1: f64,
    pub beta1: f64,
    pub delta: f64,
    pub theta: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub q: Option<f64>,
    pub xi: Option<f64>,
    pub gamma: f64,
    pub gamma_max: f64,
    pub w: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub frobenius_sq: f64,
    pub momentum_in_range: bool,
}

impl From<&BoundParams> for ParamsRecord {
    fn from(b: &BoundParams) -> Self {
        Self {
            alpha1: b.alpha1,
            beta1: b.beta1,
            delta: b.delta,
            theta: b.theta,
            eta1: b.eta1,
            eta2: b.eta2,
            q: b.q,
            xi: b.xi,
            gamma: b.gamma,
            gamma_max: b.gamma_max,
            w: b.w,
            lambda_min: b.spectrum.lambda_min,
            lambda_max: b.spectrum.lambda_max,
            frobenius_sq: b.spectrum.frobenius_sq,
            momentum_in_range: b.in_range(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub iteration: usize,
    pub observed: f64,
    /// `a₃` evaluated at the same `k`.
    pub bound: f64,
    /// `a₃` frozen at `k = 0`; only for the solution error.
    pub bound_fixed_a3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub checked: usize,
    pub violations: usize,
    pub slack: f64,
    pub passed: bool,
}

impl From<&EnvelopeReport> for ReportSummary {
    fn from(r: &EnvelopeReport) -> Self {
        Self {
            checked: r.checked,
            violations: r.violations.len(),
            slack: r.slack,
            passed: r.passed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub problem: ProblemSummary,
    pub gamma: f64,
    pub runs: usize,
    pub params: Vec<ParamsRecord>,
    /// The `γ = 0` parameters at the chosen `α₁`.
    pub zero_momentum: ParamsRecord,
    pub alpha1: f64,
    pub momentum_out_of_range: bool,
    pub z_envelope: Vec<EnvelopePoint>,
    pub z_report: ReportSummary,
    pub x_envelope: Vec<EnvelopePoint>,
    /// `None` when the momentum is outside the feasible range.
    pub x_report: Option<ReportSummary>,
}

/// Bound parameters over the `α₁` grid plus a Monte-Carlo check of both
/// envelopes; writes `bounds.json`.
pub fn cmd_bounds(config: &ExperimentConfig) -> anyhow::Result<BoundsReport> {
    let problem = build_problem(&config.problem, config.problem_seed())?;
    let a = problem.a.to_dense();
    let spec = &config.bounds;
    let first_alpha = *spec.alpha1.first().context("bounds.alpha1 is empty")?;
    let gamma = match spec.gamma_fraction {
        Some(f) => f * bound_params(&a, first_alpha, 0.0)?.gamma_max,
        None => config.gamma,
    };
    let params: Vec<BoundParams> = spec
        .alpha1
        .iter()
        .map(|&al| bound_params(&a, al, gamma))
        .collect::<drek_core::Result<_>>()?;

    let norm_xstar_sq = problem.x_star.frobenius_norm_sq();
    let last_k = spec.checkpoints.iter().copied().max().unwrap_or(0);
    let chosen = if spec.alpha1.len() > 1 {
        best_alpha1(params[0].spectrum, gamma, &spec.alpha1, norm_xstar_sq, norm_xstar_sq, last_k)
            .map(|(al, _)| al)
            .unwrap_or(first_alpha)
    } else {
        first_alpha
    };
    let chosen_params = bound_params(&a, chosen, gamma)?;
    let zero_momentum = bound_params(&a, chosen, 0.0)?;

    let method = if gamma > 0.0 { Method::Mdrek } else { Method::Drek };
    let (z_series, x_series) =
        montecarlo::error_means(&problem, method, gamma, &spec.checkpoints, spec.runs, config.seed)?;
    let z_report = verify_trace_against_bound(&z_series, &chosen_params, spec.slack)?;
    let z_envelope = z_series
        .points
        .iter()
        .map(|&(k, observed)| EnvelopePoint {
            iteration: k,
            observed,
            bound: z_bound(&chosen_params, norm_xstar_sq, k),
            bound_fixed_a3: None,
        })
        .collect();

    let in_range = chosen_params.in_range();
    let (x_envelope, x_report) = if in_range {
        let points = x_series
            .points
            .iter()
            .map(|&(k, observed)| -> drek_core::Result<EnvelopePoint> {
                Ok(EnvelopePoint {
                    iteration: k,
                    observed,
                    bound: x_error_bound(&chosen_params, norm_xstar_sq, norm_xstar_sq, k)?,
                    bound_fixed_a3: Some(x_error_bound_fixed_a3(&chosen_params, norm_xstar_sq, norm_xstar_sq, k)?),
                })
            })
            .collect::<drek_core::Result<Vec<_>>>()?;
        let report = verify_trace_against_bound(&x_series, &chosen_params, spec.slack)?;
        (points, Some(ReportSummary::from(&report)))
    } else {
        (Vec::new(), None)
    };

    let report = BoundsReport {
        problem: ProblemSummary::from(&problem),
        gamma,
        runs: spec.runs,
        params: params.iter().map(ParamsRecord::from).collect(),
        zero_momentum: ParamsRecord::from(&zero_momentum),
        alpha1: chosen,
        momentum_out_of_range: !in_range,
        z_envelope,
        z_report: ReportSummary::from(&z_report),
        x_envelope,
        x_report,
    };
    write_json(&out_dir(config)?.join("bounds.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub method: MethodName,
    pub iteration: usize,
    pub rse: f64,
    pub elapsed: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median-of-trials RSE and elapsed time per iteration. A finished trial
/// keeps contributing its last checkpoint.
pub fn median_curve(method: MethodName, traces: &[&[Checkpoint]]) -> Vec<CurvePoint> {
    let traces: Vec<&[Checkpoint]> = traces.iter().copied().filter(|t| !t.is_empty()).collect();
    let mut iterations: Vec<usize> = traces.iter().flat_map(|t| t.iter().map(|c| c.iteration)).collect();
    iterations.sort_unstable();
    iterations.dedup();
    let mut cursor = vec![0usize; traces.len()];
    let mut out = Vec::with_capacity(iterations.len());
    for k in iterations {
        let mut rse = Vec::with_capacity(traces.len());
        let mut elapsed = Vec::with_capacity(traces.len());
        for (t, trace) in traces.iter().enumerate() {
            while cursor[t] + 1 < trace.len() && trace[cursor[t] + 1].iteration <= k {
                cursor[t] += 1;
            }
            rse.push(trace[cursor[t]].rse);
            elapsed.push(trace[cursor[t]].elapsed);
        }
        out.push(CurvePoint {
            method,
            iteration: k,
            rse: median(&mut rse),
            elapsed: median(&mut elapsed),
        });
    }
    out
}

/// Writes `curves.csv` with one median series per method.
pub fn cmd_curves(config: &ExperimentConfig) -> anyhow::Result<Vec<CurvePoint>> {
    let problem = build_problem(&config.problem, config.problem_seed())?;
    let trials = run_trials(config, &problem);
    let mut points = Vec::new();
    for &method in &config.methods {
        let traces: Vec<&[Checkpoint]> = trials
            .iter()
            .filter(|t| t.record.method == method)
            .map(|t| t.checkpoints.as_slice())
            .collect();
        points.extend(median_curve(method, &traces));
    }
    write_rows(
        &out_dir(config)?.join("curves.csv"),
        &["method", "iteration", "rse", "elapsed"],
        points.iter().map(|p| {
            vec![
                p.method.to_string(),
                p.iteration.to_string(),
                fmt_real(p.rse),
                fmt_real(p.elapsed),
            ]
        }),
    )?;
    Ok(points)
}

/// Resolves `path` against `base` unless it is absolute.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}
