use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("data length {len} does not match shape {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, len: usize },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("entry ({row}, {col}) outside a {rows}x{cols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("row {0} of the coefficient matrix is identically zero")]
    ZeroRow(usize),
    #[error("column {0} of the coefficient matrix is identically zero")]
    ZeroColumn(usize),
    #[error("SVD did not converge after {sweeps} sweeps")]
    SvdNoConvergence { sweeps: usize },
    #[error("weights sum to zero; the distribution is degenerate")]
    DegenerateDistribution,
    #[error("invalid weight {value} at index {index}")]
    InvalidWeight { index: usize, value: f64 },
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("momentum {gamma} is outside the feasible range [0, {gamma_max})")]
    MomentumOutOfRange { gamma: f64, gamma_max: f64 },
    #[error("the coefficient matrix has no nonzero singular value")]
    ZeroMatrix,
}
