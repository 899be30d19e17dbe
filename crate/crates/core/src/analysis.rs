//! Closed-form convergence envelopes for the extended Kaczmarz iterations.
//!
//! With `λ_min`, `λ_max` the extremal nonzero eigenvalues of `AᵀA`,
//! `w = 1 − λ_min/‖A‖²_F` and a free splitting parameter `α₁ ∈ (0, 1)`:
//!
//! ```text
//! β₁ = α₁ / (1 − α₁)
//! δ  = 1 − α₁² λ_min / ‖A‖²_F
//! θ  = α₁β₁ / ‖A‖²_F + (1 + β₁) / λ_min
//! η₁ = δ (2γ² + 3γ + 1),   η₂ = δ γ (2γ + 1)
//! q  = (η₁ + √(η₁² + 4η₂)) / 2,   ξ = q − η₁
//! ```
//!
//! and the envelopes
//!
//! ```text
//! E‖Z⁽ᵏ⁾ − B⊥‖²_F ≤ wᵏ λ_max ‖X*‖²_F
//! E‖X⁽ᵏ⁾ − X*‖²_F ≤ qᵏ (1 + ξ) ‖X⁽⁰⁾ − X*‖²_F + a₃ / (1 − q),
//!     a₃ = θ wᵏ λ_max ‖X*‖²_F
//! ```
//!
//! valid for momentum `0 ≤ γ < γ_max = (1 − √δ) / (2√δ)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::svd::svd;

/// Default splitting parameter.
pub const DEFAULT_ALPHA1: f64 = 0.5;

/// Multiplicative headroom applied to an envelope when comparing it with a
/// Monte-Carlo mean.
pub const MONTE_CARLO_SLACK: f64 = 1.05;

/// Default number of Monte-Carlo runs for envelope checks.
pub const MONTE_CARLO_RUNS: usize = 500;

/// `β₁` solving `β₁ − α₁ = β₁α₁`.
pub fn beta1_from_alpha1(alpha1: f64) -> Result<f64> {
    if !(alpha1 > 0.0 && alpha1 < 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha1",
            value: alpha1,
            reason: "must lie in (0, 1)",
        });
    }
    Ok(alpha1 / (1.0 - alpha1))
}

/// Coefficients of `F_{k+1} ≤ a₁F_k + a₂F_{k−1} + a₃` with `F₁ = F₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionSpec {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub f0: f64,
}

impl RecursionSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| Err(Error::InvalidParameter { name, value, reason });
        if !(self.a1 >= 0.0) {
            return bad("a1", self.a1, "must be non-negative");
        }
        if !(self.a2 >= 0.0) {
            return bad("a2", self.a2, "must be non-negative");
        }
        if !(self.a3 >= 0.0) {
            return bad("a3", self.a3, "must be non-negative");
        }
        if !(self.f0 >= 0.0) {
            return bad("f0", self.f0, "must be non-negative");
        }
        let s = self.a1 + self.a2;
        if !(s > 0.0 && s < 1.0) {
            return bad("a1 + a2", s, "must lie in (0, 1)");
        }
        Ok(())
    }
}

/// `q = (a₁ + √(a₁² + 4a₂)) / 2` and `ε = q − a₁`.
pub fn recursion_q(spec: &RecursionSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    Ok(q_and_eps(spec.a1, spec.a2))
}

fn q_and_eps(a1: f64, a2: f64) -> (f64, f64) {
    if a2 == 0.0 {
        return (a1, 0.0);
    }
    let root = libm::sqrt(a1 * a1 + 4.0 * a2);
    // ε = 2a₂ / (a₁ + √(a₁² + 4a₂)) is the cancellation-free form of q − a₁.
    let eps = 2.0 * a2 / (a1 + root);
    ((a1 + root) / 2.0, eps)
}

/// `q^{k−1} (1 + ε) F₀ + a₃ / (1 − q)` for `k ≥ 1`.
pub fn recursion_bound(spec: &RecursionSpec, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            value: 0.0,
            reason: "the recursion bound starts at k = 1",
        });
    }
    let (q, eps) = recursion_q(spec)?;
    Ok(libm::pow(q, (k - 1) as f64) * (1.0 + eps) * spec.f0 + spec.a3 / (1.0 - q))
}

/// Spectral data of `A` that the envelopes depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub frobenius_sq: f64,
    pub rows: usize,
    pub cols: usize,
}

impl Spectrum {
    pub fn of(a: &DenseMatrix) -> Result<Self> {
        let f = svd(a, None)?;
        let lambda_min = f.lambda_min_nonzero().ok_or(Error::ZeroMatrix)?;
        Ok(Self {
            lambda_min,
            lambda_max: f.lambda_max(),
            frobenius_sq: a.frobenius_norm_sq(),
            rows: a.rows(),
            cols: a.cols(),
        })
    }

    /// `w = 1 − λ_min / ‖A‖²_F`.
    pub fn w(&self) -> f64 {
        1.0 - self.lambda_min / self.frobenius_sq
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub alpha1: f64,
    pub beta1: f64,
    pub delta: f64,
    pub theta: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// `None` when `γ ≥ γ_max`.
    pub q: Option<f64>,
    pub xi: Option<f64>,
    pub gamma: f64,
    pub gamma_max: f64,
    pub w: f64,
    pub spectrum: Spectrum,
}

impl BoundParams {
    pub fn in_range(&self) -> bool {
        self.q.is_some()
    }

    pub fn lambda_min(&self) -> f64 {
        self.spectrum.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.spectrum.lambda_max
    }
}

/// Bound parameters from the SVD of `a`.
pub fn bound_params(a: &DenseMatrix, alpha1: f64, gamma: f64) -> Result<BoundParams> {
    bound_params_from_spectrum(Spectrum::of(a)?, alpha1, gamma)
}

pub fn bound_params_from_spectrum(spectrum: Spectrum, alpha1: f64, gamma: f64) -> Result<BoundParams> {
    let beta1 = beta1_from_alpha1(alpha1)?;
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: gamma,
            reason: "momentum must be finite and non-negative",
        });
    }
    if !(spectrum.lambda_min > 0.0) || !(spectrum.frobenius_sq > 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let Spectrum {
        lambda_min,
        frobenius_sq,
        ..
    } = spectrum;
    let delta = 1.0 - alpha1 * alpha1 * lambda_min / frobenius_sq;
    let theta = alpha1 * beta1 / frobenius_sq + (1.0 + beta1) / lambda_min;
    let eta1 = delta * (2.0 * gamma * gamma + 3.0 * gamma + 1.0);
    let eta2 = delta * gamma * (2.0 * gamma + 1.0);
    let sqrt_delta = libm::sqrt(delta);
    let gamma_max = (1.0 - sqrt_delta) / (2.0 * sqrt_delta);
    let (q, xi) = if gamma < gamma_max && eta1 + eta2 < 1.0 {
        let (q, xi) = q_and_eps(eta1, eta2);
        (Some(q), Some(xi))
    } else {
        (None, None)
    };
    Ok(BoundParams {
        alpha1,
        beta1,
        delta,
        theta,
        eta1,
        eta2,
        q,
        xi,
        gamma,
        gamma_max,
        w: spectrum.w(),
        spectrum,
    })
}

/// `wᵏ λ_max ‖X*‖²_F`.
pub fn z_bound(params: &BoundParams, norm_xstar_sq: f64, k: usize) -> f64 {
    libm::pow(params.w, k as f64) * params.lambda_max() * norm_xstar_sq
}

/// `a₃ = θ wᵏ λ_max ‖X*‖²_F`.
pub fn a3(params: &BoundParams, norm_xstar_sq: f64, k: usize) -> f64 {
    params.theta * z_bound(params, norm_xstar_sq, k)
}

/// Solution-error envelope with `a₃` evaluated at the same `k`.
pub fn x_error_bound(params: &BoundParams, norm_x0_err_sq: f64, norm_xstar_sq: f64, k: usize) -> Result<f64> {
    x_error_bound_with_a3(params, norm_x0_err_sq, a3(params, norm_xstar_sq, k), k)
}

/// Solution-error envelope with `a₃` frozen at its `k = 0` value, the
/// reading under which `a₃` bounds every forcing term of the recursion.
pub fn x_error_bound_fixed_a3(params: &BoundParams, norm_x0_err_sq: f64, norm_xstar_sq: f64, k: usize) -> Result<f64> {
    x_error_bound_with_a3(params, norm_x0_err_sq, a3(params, norm_xstar_sq, 0), k)
}

fn x_error_bound_with_a3(params: &BoundParams, norm_x0_err_sq: f64, a3: f64, k: usize) -> Result<f64> {
    let (q, xi) = match (params.q, params.xi) {
        (Some(q), Some(xi)) => (q, xi),
        _ => {
            return Err(Error::MomentumOutOfRange {
                gamma: params.gamma,
                gamma_max: params.gamma_max,
            })
        }
    };
    Ok(libm::pow(q, k as f64) * (1.0 + xi) * norm_x0_err_sq + a3 / (1.0 - q))
}

/// Which envelope a series is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeKind {
    /// `‖Z⁽ᵏ⁾ − B⊥‖²_F`.
    ZResidual,
    /// `‖X⁽ᵏ⁾ − X*‖²_F`.
    SolutionError,
}

/// Mean squared errors at checkpoints, averaged over `runs` independent runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub kind: EnvelopeKind,
    /// `(m, n)` of the coefficient matrix the runs used.
    pub dims: (usize, usize),
    pub runs: usize,
    pub points: Vec<(usize, f64)>,
    pub norm_x0_err_sq: f64,
    pub norm_xstar_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub iteration: usize,
    pub observed: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub kind: EnvelopeKind,
    pub runs: usize,
    pub slack: f64,
    pub checked: usize,
    /// Checkpoints where the observation exceeds `slack × envelope`.
    pub violations: Vec<Violation>,
    /// A single run is compared informatively only: the envelopes bound an
    /// expectation.
    pub informative_only: bool,
}

impl EnvelopeReport {
    pub fn passed(&self) -> bool {
        self.informative_only || self.violations.is_empty()
    }
}

/// Compares a mean-error series with its envelope.
pub fn verify_trace_against_bound(series: &ErrorSeries, params: &BoundParams, slack: f64) -> Result<EnvelopeReport> {
    let dims = (params.spectrum.rows, params.spectrum.cols);
    if series.dims != dims {
        return Err(Error::DimensionMismatch {
            op: "verify_trace_against_bound",
            left: dims,
            right: series.dims,
        });
    }
    let mut violations = Vec::new();
    for &(k, observed) in &series.points {
        let envelope = match series.kind {
            EnvelopeKind::ZResidual => z_bound(params, series.norm_xstar_sq, k),
            EnvelopeKind::SolutionError => {
                x_error_bound(params, series.norm_x0_err_sq, series.norm_xstar_sq, k)?
            }
        };
        if observed > slack * envelope {
            violations.push(Violation {
                iteration: k,
                observed,
                envelope,
            });
        }
    }
    Ok(EnvelopeReport {
        kind: series.kind,
        runs: series.runs,
        slack,
        checked: series.points.len(),
        violations,
        informative_only: series.runs <= 1,
    })
}

/// The `α₁` from `grid` with the smallest solution-error envelope at `k`.
pub fn best_alpha1(
    spectrum: Spectrum,
    gamma: f64,
    grid: &[f64],
    norm_x0_err_sq: f64,
    norm_xstar_sq: f64,
    k: usize,
) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for &alpha1 in grid {
        let params = bound_params_from_spectrum(spectrum, alpha1, gamma)?;
        let Ok(bound) = x_error_bound(&params, norm_x0_err_sq, norm_xstar_sq, k) else {
            continue;
        };
        if best.map_or(true, |(_, b)| bound < b) {
            best = Some((alpha1, bound));
        }
    }
    best.ok_or(Error::MomentumOutOfRange {
        gamma,
        gamma_max: 0.0,
    })
}
