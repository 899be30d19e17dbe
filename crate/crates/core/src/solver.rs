//! Extended Kaczmarz iterations for `AX = B`.
//!
//! Every method alternates a column projection that drives `Z` towards `B⊥`
//! (the part of `B` outside `range(A)`) and a row projection that drives `X`
//! towards `X* = A⁺B` on the cleaned system `AX = B − Z`:
//!
//! * **DREK** samples the column with probability `‖A[:, j]ᵀZ‖² / ‖AᵀZ‖²_F`
//!   and the row with probability `‖r[i, :]‖² / ‖r‖²_F`, `r = B − AX − Z`.
//! * **MDREK** adds the extrapolation `Y ← X⁺ + γ(X⁺ − X)` and projects from `Y`.
//! * **REK baseline** uses the static probabilities `‖A[:, j]‖² / ‖A‖²_F` and
//!   `‖A[i, :]‖² / ‖A‖²_F`.
//! * **REKDR** is the single right-hand-side method written on plain vectors
//!   ([`run_rekdr_vector`]).
//!
//! Residuals that drive the sampling are either recomputed from scratch each
//! step ([`ResidualMode::Full`]) or maintained by rank-one updates with a
//! periodic refresh ([`ResidualMode::Incremental`]). The projections
//! themselves always use exact row/column products.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::operator::LinearOperator;
use crate::problems::Problem;
use crate::sampling::{categorical_sample, RngStream, WeightVector};

/// Source of elapsed seconds for trace checkpoints.
pub trait Clock {
    fn elapsed_secs(&self) -> f64;
}

/// Reports zero elapsed time. Used when no wall clock is available.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_secs(&self) -> f64 {
        0.0
    }
}

/// Monotonic wall clock started at construction.
#[cfg(feature = "std")]
#[derive(Debug, Clone, Copy)]
pub struct WallClock(std::time::Instant);

#[cfg(feature = "std")]
impl WallClock {
    pub fn start() -> Self {
        Self(std::time::Instant::now())
    }
}

#[cfg(feature = "std")]
impl Clock for WallClock {
    fn elapsed_secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Drek,
    Mdrek,
    RekBaseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Drek => "drek",
            Method::Mdrek => "mdrek",
            Method::RekBaseline => "rek-baseline",
        }
    }

    fn residual_sampling(self) -> bool {
        !matches!(self, Method::RekBaseline)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualMode {
    Full,
    Incremental,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub rse_tolerance: f64,
    /// Momentum, only used by MDREK.
    pub gamma: f64,
    pub seed: u64,
    pub residual_mode: ResidualMode,
    /// Incremental mode recomputes the residuals every this many steps.
    pub refresh_interval: usize,
    pub rse_check_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            rse_tolerance: 1e-6,
            gamma: 0.0,
            seed: 0,
            residual_mode: ResidualMode::Full,
            refresh_interval: 1000,
            rse_check_stride: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rse_tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "rse_tolerance",
                value: self.rse_tolerance,
                reason: "must be positive",
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iterations",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: self.gamma,
                reason: "momentum must be finite and non-negative",
            });
        }
        if self.refresh_interval == 0 || self.rse_check_stride == 0 {
            return Err(Error::InvalidParameter {
                name: "refresh_interval/rse_check_stride",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    Converged,
    IterationCap,
    /// Both residuals vanished before the tolerance was met.
    Degenerate,
}

impl TraceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceStatus::Converged => "converged",
            TraceStatus::IterationCap => "iteration-cap",
            TraceStatus::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub iteration: usize,
    pub rse: f64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub checkpoints: Vec<Checkpoint>,
    pub status: TraceStatus,
}

impl ConvergenceTrace {
    pub fn final_rse(&self) -> f64 {
        self.checkpoints.last().map_or(f64::INFINITY, |c| c.rse)
    }

    pub fn iterations(&self) -> usize {
        self.checkpoints.last().map_or(0, |c| c.iteration)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub x: DenseMatrix,
    pub trace: ConvergenceTrace,
    /// Scalar multiplications spent on iteration work (residual maintenance,
    /// sampling weights and the two projections), stopping checks excluded.
    pub flops: u64,
}

impl SolveOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.iterations()
    }

    pub fn flops_per_iteration(&self) -> f64 {
        self.flops as f64 / self.iterations().max(1) as f64
    }
}

/// Relative solution error `‖X − X*‖²_F / ‖X*‖²_F`, falling back to the
/// absolute `‖X‖²_F` when `X* = 0`.
pub fn relative_solution_error(x: &DenseMatrix, x_star: &DenseMatrix) -> Result<f64> {
    let err = x.dist_sq(x_star)?;
    let denom = x_star.frobenius_norm_sq();
    Ok(if denom > 0.0 { err / denom } else { err })
}

/// Dense Gram matrices used by the incremental residual updates.
#[derive(Debug, Clone)]
struct GramCache {
    /// `AᵀA`, n×n.
    cols: DenseMatrix,
    /// `AAᵀ`, m×m.
    rows: DenseMatrix,
    /// `A (X⁽ᵏ⁾ − X⁽ᵏ⁻¹⁾)`, only with momentum.
    a_dx: Option<DenseMatrix>,
}

/// Iterate triple `(X, Y, Z)` plus cached residuals and the sampling stream.
#[derive(Debug, Clone)]
pub struct SolverState<'a, A: LinearOperator> {
    a: &'a A,
    b: &'a DenseMatrix,
    method: Method,
    momentum: Option<f64>,
    mode: ResidualMode,
    refresh_interval: usize,

    x: DenseMatrix,
    /// Momentum iterate; `None` means `Y = X`.
    y: Option<DenseMatrix>,
    x_prev: Option<DenseMatrix>,
    z: DenseMatrix,
    /// `AᵀZ` (n×p).
    r_hat: DenseMatrix,
    /// `B − AY − Z` (m×p).
    r: DenseMatrix,

    row_norms: Vec<f64>,
    col_norms: Vec<f64>,
    static_rows: Option<WeightVector>,
    static_cols: Option<WeightVector>,
    gram: Option<GramCache>,

    rng: RngStream,
    iteration: usize,
    since_refresh: usize,
    last_col: Option<usize>,
    last_row: Option<usize>,
    z_stalled: bool,
    x_stalled: bool,
    flops: u64,
    buf_p: Vec<f64>,
}

impl<'a, A: LinearOperator> SolverState<'a, A> {
    /// Starts from `X⁽⁰⁾ = Y⁽⁰⁾ = 0`, `Z⁽⁰⁾ = B`.
    pub fn new(a: &'a A, b: &'a DenseMatrix, method: Method, config: &SolverConfig) -> Result<Self> {
        let x0 = DenseMatrix::zeros(a.ncols(), b.cols());
        Self::with_initial(a, b, method, config, x0)
    }

    /// Starts from a caller-supplied `X⁽⁰⁾` (columns should lie in `range(Aᵀ)`).
    pub fn with_initial(
        a: &'a A,
        b: &'a DenseMatrix,
        method: Method,
        config: &SolverConfig,
        x0: DenseMatrix,
    ) -> Result<Self> {
        config.validate()?;
        let (m, n, p) = (a.nrows(), a.ncols(), b.cols());
        if b.rows() != m {
            return Err(Error::DimensionMismatch {
                op: "solver B",
                left: (m, n),
                right: b.shape(),
            });
        }
        if x0.shape() != (n, p) {
            return Err(Error::DimensionMismatch {
                op: "solver X0",
                left: (n, p),
                right: x0.shape(),
            });
        }
        let row_norms = a.row_sq_norms();
        let col_norms = a.col_sq_norms();
        if let Some(i) = row_norms.iter().position(|&v| v == 0.0) {
            return Err(Error::ZeroRow(i));
        }
        if let Some(j) = col_norms.iter().position(|&v| v == 0.0) {
            return Err(Error::ZeroColumn(j));
        }
        let (static_rows, static_cols) = if method.residual_sampling() {
            (None, None)
        } else {
            (
                Some(WeightVector::new(row_norms.clone())?),
                Some(WeightVector::new(col_norms.clone())?),
            )
        };
        let momentum = (method == Method::Mdrek).then_some(config.gamma);
        let mode = if method.residual_sampling() {
            config.residual_mode
        } else {
            ResidualMode::Full
        };

        let z = b.clone();
        let mut state = Self {
            a,
            b,
            method,
            momentum,
            mode,
            refresh_interval: config.refresh_interval,
            y: momentum.map(|_| x0.clone()),
            x_prev: momentum.map(|_| x0.clone()),
            x: x0,
            z,
            r_hat: DenseMatrix::zeros(n, p),
            r: DenseMatrix::zeros(m, p),
            row_norms,
            col_norms,
            static_rows,
            static_cols,
            gram: None,
            rng: RngStream::new(config.seed),
            iteration: 0,
            since_refresh: 0,
            last_col: None,
            last_row: None,
            z_stalled: false,
            x_stalled: false,
            flops: 0,
            buf_p: vec![0.0; p],
        };
        if state.mode == ResidualMode::Incremental {
            let dense = a.to_dense();
            let cols = dense.transpose_apply(&dense)?;
            let rows = dense.matmul(&dense.transpose())?;
            let a_dx = momentum.map(|_| DenseMatrix::zeros(m, p));
            state.gram = Some(GramCache { cols, rows, a_dx });
            state.refresh_residuals()?;
            // Setup work is not per-iteration work.
            state.flops = 0;
        }
        Ok(state)
    }

    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    /// The momentum iterate (equal to `X` for methods without momentum).
    pub fn y(&self) -> &DenseMatrix {
        self.y.as_ref().unwrap_or(&self.x)
    }

    pub fn z(&self) -> &DenseMatrix {
        &self.z
    }

    /// Cached `AᵀZ`. In full mode it is current only right after a column step
    /// was sampled from it.
    pub fn r_hat(&self) -> &DenseMatrix {
        &self.r_hat
    }

    /// Cached `B − AY − Z`.
    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn last_col(&self) -> Option<usize> {
        self.last_col
    }

    pub fn last_row(&self) -> Option<usize> {
        self.last_row
    }

    pub fn flops(&self) -> u64 {
        self.flops
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn mode(&self) -> ResidualMode {
        self.mode
    }

    /// True when the last iteration found both sampling residuals at zero.
    pub fn is_degenerate(&self) -> bool {
        self.z_stalled && self.x_stalled
    }

    pub fn into_x(self) -> DenseMatrix {
        self.x
    }

    fn p(&self) -> usize {
        self.b.cols()
    }

    fn count(&mut self, n: usize) {
        self.flops += n as u64;
    }

    /// Recomputes `r̂ = AᵀZ` and `r = B − AY − Z` from scratch.
    pub fn refresh_residuals(&mut self) -> Result<()> {
        self.r_hat = self.a.transpose_apply(&self.z)?;
        self.r = self.full_row_residual()?;
        let work = 2 * self.a.nnz() * self.p();
        self.count(work);
        if let (Some(gamma_cache), Some(x_prev)) = (self.gram.as_mut(), self.x_prev.as_ref()) {
            if gamma_cache.a_dx.is_some() {
                let dx = self.x.sub(x_prev)?;
                gamma_cache.a_dx = Some(self.a.apply(&dx)?);
                self.flops += (self.a.nnz() * self.b.cols()) as u64;
            }
        }
        self.since_refresh = 0;
        Ok(())
    }

    fn full_row_residual(&self) -> Result<DenseMatrix> {
        let ay = self.a.apply(self.y())?;
        let mut r = self.b.sub(&ay)?;
        for (rv, zv) in r.data_mut().iter_mut().zip(self.z.data()) {
            *rv -= zv;
        }
        Ok(r)
    }

    fn column_weights(&mut self) -> Result<WeightVector> {
        if let Some(w) = &self.static_cols {
            return Ok(w.clone());
        }
        if self.mode == ResidualMode::Full {
            self.r_hat = self.a.transpose_apply(&self.z)?;
            let work = self.a.nnz() * self.p();
            self.count(work);
        }
        let work = self.r_hat.rows() * self.p();
        self.count(work);
        WeightVector::new(self.r_hat.row_sq_norms())
    }

    fn row_weights(&mut self) -> Result<WeightVector> {
        if let Some(w) = &self.static_rows {
            return Ok(w.clone());
        }
        if self.mode == ResidualMode::Full {
            self.r = self.full_row_residual()?;
            let work = self.a.nnz() * self.p();
            self.count(work);
        }
        let work = self.r.rows() * self.p();
        self.count(work);
        WeightVector::new(self.r.row_sq_norms())
    }

    /// Column step: sample `j` from the dual residual and project
    /// `Z ← Z − A[:, j] (A[:, j]ᵀZ) / ‖A[:, j]‖²`. Leaves `Z` unchanged when
    /// `AᵀZ = 0`.
    pub fn z_step(&mut self) -> Result<()> {
        let w = self.column_weights()?;
        match categorical_sample(&w, &mut self.rng) {
            Ok(j) => self.z_step_at(j),
            Err(Error::DegenerateDistribution) => {
                self.z_stalled = true;
                self.last_col = None;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    /// Column step with a forced column index.
    pub fn z_step_at(&mut self, j: usize) -> Result<()> {
        let p = self.p();
        let mut c = core::mem::take(&mut self.buf_p);
        self.a.col_dot(j, &self.z, &mut c);
        let alpha = -1.0 / self.col_norms[j];
        self.a.col_axpy(j, alpha, &c, &mut self.z);
        let work = 2 * self.a.col_nnz(j) * p;
        self.count(work);

        if let Some(gram) = &self.gram {
            // r̂ ← r̂ − (AᵀA[:, j]) cᵀ / ‖A_j‖², r ← r + A[:, j] cᵀ / ‖A_j‖².
            let g = &gram.cols;
            let n = g.rows();
            for k in 0..n {
                let s = alpha * g[(k, j)];
                for (rv, cv) in self.r_hat.row_mut(k).iter_mut().zip(&c) {
                    *rv += s * cv;
                }
            }
            self.a.col_axpy(j, -alpha, &c, &mut self.r);
            self.flops += (n * p + self.a.col_nnz(j) * p) as u64;
        }
        self.buf_p = c;
        self.z_stalled = false;
        self.last_col = Some(j);
        Ok(())
    }

    /// Row step: sample `i` from `r = B − AY − Z` and project `Y` onto the
    /// hyperplane `A[i, :] X = B[i, :] − Z[i, :]`; with momentum, extrapolate.
    pub fn x_step(&mut self) -> Result<()> {
        let w = self.row_weights()?;
        match categorical_sample(&w, &mut self.rng) {
            Ok(i) => self.x_step_at(i),
            Err(Error::DegenerateDistribution) => {
                self.x_stalled = true;
                self.last_row = None;
                // X⁽ᵏ⁺¹⁾ = Y⁽ᵏ⁾ with a zero projection increment.
                self.advance_momentum(None)
            }
            Err(e) => Err(e),
        }
    }

    /// Row step with a forced row index.
    pub fn x_step_at(&mut self, i: usize) -> Result<()> {
        let p = self.p();
        let mut d = core::mem::take(&mut self.buf_p);
        self.a.row_dot(i, self.y(), &mut d);
        for ((dv, bv), zv) in d.iter_mut().zip(self.b.row(i)).zip(self.z.row(i)) {
            *dv = (bv - zv) - *dv;
        }
        let alpha = 1.0 / self.row_norms[i];
        let work = self.a.row_nnz(i) * p;
        self.count(work);
        self.x_stalled = false;
        self.last_row = Some(i);
        let res = self.advance_momentum(Some((i, alpha, &d)));
        self.buf_p = d;
        res
    }

    fn advance_momentum(&mut self, proj: Option<(usize, f64, &[f64])>) -> Result<()> {
        let p = self.p();
        match self.momentum {
            None => {
                if let Some((i, alpha, d)) = proj {
                    self.a.row_axpy(i, alpha, d, &mut self.x);
                    let work = self.a.row_nnz(i) * p;
                    self.count(work);
                    if let Some(gram) = &self.gram {
                        // r ← r − (AA[i, :]ᵀ) dᵀ / ‖A_i‖².
                        row_gram_update(&gram.rows, i, -alpha, d, &mut self.r);
                        self.flops += (gram.rows.rows() * p) as u64;
                    }
                }
            }
            Some(gamma) => {
                let y = self.y.as_mut().expect("momentum state keeps Y");
                let x_prev = self.x_prev.as_mut().expect("momentum state keeps X_prev");
                // x_prev ← X⁽ᵏ⁾, X ← Y⁽ᵏ⁾ + projection.
                core::mem::swap(x_prev, &mut self.x);
                self.x.data_mut().copy_from_slice(y.data());
                if let Some((i, alpha, d)) = proj {
                    self.a.row_axpy(i, alpha, d, &mut self.x);
                    self.flops += (self.a.row_nnz(i) * p) as u64;
                }
                // Y⁽ᵏ⁺¹⁾ = X⁽ᵏ⁺¹⁾ + γ (X⁽ᵏ⁺¹⁾ − X⁽ᵏ⁾).
                for ((yv, xv), pv) in y.data_mut().iter_mut().zip(self.x.data()).zip(x_prev.data()) {
                    *yv = xv + gamma * (xv - pv);
                }
                self.flops += (self.x.data().len()) as u64;

                if let Some(gram) = self.gram.as_mut() {
                    // With s = X⁽ᵏ⁺¹⁾ − Y⁽ᵏ⁾ and W = A(X⁽ᵏ⁾ − X⁽ᵏ⁻¹⁾):
                    // W ← γW + As, AΔY = As + γW, r ← r − AΔY.
                    let a_dx = gram.a_dx.as_mut().expect("momentum cache");
                    let m = a_dx.rows();
                    let mut a_s = DenseMatrix::zeros(m, p);
                    if let Some((i, alpha, d)) = proj {
                        row_gram_update(&gram.rows, i, alpha, d, &mut a_s);
                    }
                    for ((wv, sv), rv) in a_dx
                        .data_mut()
                        .iter_mut()
                        .zip(a_s.data())
                        .zip(self.r.data_mut())
                    {
                        *wv = gamma * *wv + sv;
                        *rv -= sv + gamma * *wv;
                    }
                    self.flops += (3 * m * p) as u64;
                }
            }
        }
        Ok(())
    }

    /// One full iteration: column step, row step, bookkeeping.
    pub fn step(&mut self) -> Result<()> {
        self.z_step()?;
        self.x_step()?;
        self.iteration += 1;
        if self.mode == ResidualMode::Incremental {
            self.since_refresh += 1;
            if self.since_refresh >= self.refresh_interval {
                self.refresh_residuals()?;
            }
        }
        Ok(())
    }

    /// Iterates until the RSE against `x_star` reaches the tolerance, the
    /// iteration cap is hit, or both residuals vanish.
    pub fn run<C: Clock>(mut self, x_star: &DenseMatrix, config: &SolverConfig, clock: &C) -> Result<SolveOutcome> {
        let mut checkpoints = Vec::new();
        let rse0 = relative_solution_error(&self.x, x_star)?;
        checkpoints.push(Checkpoint {
            iteration: self.iteration,
            rse: rse0,
            elapsed: clock.elapsed_secs(),
        });
        let mut status = if rse0 <= config.rse_tolerance {
            Some(TraceStatus::Converged)
        } else {
            None
        };
        while status.is_none() && self.iteration < config.max_iterations {
            self.step()?;
            let degenerate = self.is_degenerate();
            let at_stride = self.iteration % config.rse_check_stride == 0;
            if at_stride || degenerate || self.iteration == config.max_iterations {
                let rse = relative_solution_error(&self.x, x_star)?;
                checkpoints.push(Checkpoint {
                    iteration: self.iteration,
                    rse,
                    elapsed: clock.elapsed_secs(),
                });
                if rse <= config.rse_tolerance {
                    status = Some(TraceStatus::Converged);
                } else if degenerate {
                    status = Some(TraceStatus::Degenerate);
                }
            }
        }
        let flops = self.flops;
        Ok(SolveOutcome {
            x: self.x,
            trace: ConvergenceTrace {
                checkpoints,
                status: status.unwrap_or(TraceStatus::IterationCap),
            },
            flops,
        })
    }
}

/// `out += alpha · (AAᵀ)[:, i] dᵀ`.
fn row_gram_update(gram_rows: &DenseMatrix, i: usize, alpha: f64, d: &[f64], out: &mut DenseMatrix) {
    for k in 0..gram_rows.rows() {
        let s = alpha * gram_rows[(k, i)];
        for (o, dv) in out.row_mut(k).iter_mut().zip(d) {
            *o += s * dv;
        }
    }
}

/// Runs `method` on `problem` with the given clock.
pub fn run_method<C: Clock>(
    problem: &Problem,
    method: Method,
    config: &SolverConfig,
    clock: &C,
) -> Result<SolveOutcome> {
    let state = SolverState::new(&problem.a, &problem.b, method, config)?;
    state.run(&problem.x_star, config, clock)
}

/// DREK from `X⁽⁰⁾ = 0`, `Z⁽⁰⁾ = B`.
pub fn run_drek(problem: &Problem, config: &SolverConfig) -> Result<SolveOutcome> {
    run_method(problem, Method::Drek, config, &NoClock)
}

/// MDREK with momentum `config.gamma`.
pub fn run_mdrek(problem: &Problem, config: &SolverConfig) -> Result<SolveOutcome> {
    run_method(problem, Method::Mdrek, config, &NoClock)
}

/// Extended Kaczmarz with static norm-proportional row/column probabilities.
pub fn run_rek_baseline(problem: &Problem, config: &SolverConfig) -> Result<SolveOutcome> {
    run_method(problem, Method::RekBaseline, config, &NoClock)
}

/// Result of the single right-hand-side method.
#[derive(Debug, Clone)]
pub struct VectorOutcome {
    pub x: Vec<f64>,
    pub trace: ConvergenceTrace,
    /// Every iterate `x_k`, `k ≥ 1`, when requested.
    pub iterates: Vec<Vec<f64>>,
}

/// REKDR for `Ax = b` written on plain vectors. Uses the same arithmetic
/// grouping and the same random stream layout as the matrix methods, so it
/// agrees with DREK on a single-column right-hand side step for step.
pub fn run_rekdr_vector<A: LinearOperator, C: Clock>(
    a: &A,
    b: &[f64],
    x_star: &[f64],
    config: &SolverConfig,
    clock: &C,
    keep_iterates: bool,
) -> Result<VectorOutcome> {
    config.validate()?;
    let (m, n) = (a.nrows(), a.ncols());
    if b.len() != m || x_star.len() != n {
        return Err(Error::DimensionMismatch {
            op: "rekdr",
            left: (m, n),
            right: (b.len(), x_star.len()),
        });
    }
    let col_norms = a.col_sq_norms();
    let row_norms = a.row_sq_norms();
    if let Some(i) = row_norms.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroRow(i));
    }
    if let Some(j) = col_norms.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroColumn(j));
    }

    // Column blocks of width one let us reuse the row/column kernels.
    let mut x = DenseMatrix::zeros(n, 1);
    let mut z = DenseMatrix::column(b)?;
    let xs = DenseMatrix::column(x_star)?;
    let bm = DenseMatrix::column(b)?;
    let mut rng = RngStream::new(config.seed);
    let mut scalar = [0.0];
    let mut iterates = Vec::new();

    let mut checkpoints = vec![Checkpoint {
        iteration: 0,
        rse: relative_solution_error(&x, &xs)?,
        elapsed: clock.elapsed_secs(),
    }];
    let mut status = (checkpoints[0].rse <= config.rse_tolerance).then_some(TraceStatus::Converged);
    let mut k = 0;
    while status.is_none() && k < config.max_iterations {
        // r̂_k = Aᵀz_k, j_k ∝ |r̂_k(j)|².
        let r_hat = a.transpose_apply(&z)?;
        let wj = WeightVector::new(r_hat.data().iter().map(|v| v * v).collect())?;
        let z_moved = match categorical_sample(&wj, &mut rng) {
            Ok(j) => {
                a.col_dot(j, &z, &mut scalar);
                a.col_axpy(j, -1.0 / col_norms[j], &scalar, &mut z);
                true
            }
            Err(Error::DegenerateDistribution) => false,
            Err(e) => return Err(e),
        };
        // r_k = b − Ax_k − z_{k+1}, i_k ∝ |r_k(i)|².
        let ax = a.apply(&x)?;
        let r: Vec<f64> = (0..m).map(|i| (bm[(i, 0)] - ax[(i, 0)]) - z[(i, 0)]).collect();
        let wi = WeightVector::new(r.iter().map(|v| v * v).collect())?;
        let x_moved = match categorical_sample(&wi, &mut rng) {
            Ok(i) => {
                a.row_dot(i, &x, &mut scalar);
                scalar[0] = (bm[(i, 0)] - z[(i, 0)]) - scalar[0];
                a.row_axpy(i, 1.0 / row_norms[i], &scalar, &mut x);
                true
            }
            Err(Error::DegenerateDistribution) => false,
            Err(e) => return Err(e),
        };
        k += 1;
        if keep_iterates {
            iterates.push(x.data().to_vec());
        }
        let degenerate = !z_moved && !x_moved;
        if k % config.rse_check_stride == 0 || degenerate || k == config.max_iterations {
            let rse = relative_solution_error(&x, &xs)?;
            checkpoints.push(Checkpoint {
                iteration: k,
                rse,
                elapsed: clock.elapsed_secs(),
            });
            if rse <= config.rse_tolerance {
                status = Some(TraceStatus::Converged);
            } else if degenerate {
                status = Some(TraceStatus::Degenerate);
            }
        }
    }
    Ok(VectorOutcome {
        x: x.into_data(),
        trace: ConvergenceTrace {
            checkpoints,
            status: status.unwrap_or(TraceStatus::IterationCap),
        },
        iterates,
    })
}
