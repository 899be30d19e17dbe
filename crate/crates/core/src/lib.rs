//! Dual-space residual-based randomized extended Kaczmarz solvers for the
//! (possibly inconsistent) matrix equation `AX = B`.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`matrix`] / [`sparse`] / [`svd`]: dense and dual-format sparse storage,
//!   the products the solvers need, and a one-sided Jacobi SVD that provides
//!   the minimal-norm least-squares reference `X* = A⁺B`.
//! * [`sampling`]: a seeded xoshiro256++ stream and residual-weighted
//!   categorical sampling.
//! * [`solver`]: DREK, MDREK (Nesterov momentum), the vector REKDR method and
//!   a norm-probability REK baseline.
//! * [`analysis`]: the closed-form convergence envelopes and their parameters.
//! * [`problems`]: seeded problem generators.
//!
//! File formats, the experiment harness and the CLI live in the `drek-harness`
//! crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod matrix;
pub mod operator;
pub mod problems;
pub mod sampling;
pub mod solver;
pub mod sparse;
pub mod svd;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use operator::{LinearOperator, SystemMatrix};
pub use problems::{Problem, ProblemMeta};
pub use sampling::{RngStream, WeightVector};
pub use solver::{
    ConvergenceTrace, Method, ResidualMode, SolveOutcome, SolverConfig, SolverState, TraceStatus,
};
pub use sparse::DualSparseMatrix;
pub use svd::SvdFactors;
