//! Matrix Market IO, experiment configuration and the benchmark harness for
//! the `drek-core` solvers. The `drek` binary wraps [`harness`].

pub mod config;
pub mod harness;
pub mod montecarlo;
pub mod mtx;

pub use config::{ExperimentConfig, MethodName, Overrides};
pub use mtx::{load_matrix_market, read_matrix_market, save_matrix_market, write_matrix_market, MtxError};
