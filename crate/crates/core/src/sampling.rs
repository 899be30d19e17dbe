//! Seeded random streams and residual-weighted index selection.

use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for stream `index` of `base`.
pub fn stream_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Seed for a labelled run, e.g. `(base_seed, "drek", trial)`. Stable across
/// platforms and independent of the order in which labels are visited.
pub fn derive_seed(base: u64, label: &str, index: u64) -> u64 {
    // FNV-1a over the label.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    stream_seed(mix64(base ^ h), index)
}

/// Deterministic xoshiro256++ stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    rng: Xoshiro256PlusPlus,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// Independent stream `index` derived from `base`.
    pub fn stream(base: u64, index: u64) -> Self {
        Self::new(stream_seed(base, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate (Box–Muller, one draw per pair of uniforms).
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }

    /// `rows × cols` matrix of i.i.d. standard normals, filled row by row.
    pub fn randn(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| self.standard_normal())
    }
}

/// Non-negative weights with cached prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl WeightVector {
    /// Rejects negative or non-finite weights. An all-zero vector is allowed;
    /// sampling from it reports [`Error::DegenerateDistribution`].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for (index, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidWeight { index, value: w });
            }
            acc += w;
            cumulative.push(acc);
        }
        Ok(Self {
            weights,
            cumulative,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Normalized probabilities.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::DegenerateDistribution);
        }
        Ok(self.weights.iter().map(|w| w / total).collect())
    }
}

/// Draws index `i` with probability `wᵢ / Σw` by inverse CDF. Consumes
/// exactly one `u64` from `rng`.
pub fn categorical_sample(w: &WeightVector, rng: &mut RngStream) -> Result<usize> {
    let total = w.total();
    if !(total > 0.0) {
        return Err(Error::DegenerateDistribution);
    }
    let u = rng.next_f64() * total;
    let idx = w.cumulative.partition_point(|&c| c <= u);
    if idx < w.len() {
        return Ok(idx);
    }
    // `u` rounded up to `total`: take the last index with positive weight.
    Ok(w.weights.iter().rposition(|&x| x > 0.0).unwrap_or(0))
}

/// Row-selection weights `‖r[i, :]‖²`.
pub fn residual_row_weights(r: &DenseMatrix) -> WeightVector {
    WeightVector::new(r.row_sq_norms()).expect("squared norms are non-negative")
}

/// Column-selection weights `‖r̂[:, j]‖²` for a dual residual laid out with one
/// column per column of `A` (that is, `r̂ = ZᵀA`, p×n).
pub fn residual_col_weights(r_hat: &DenseMatrix) -> WeightVector {
    WeightVector::new(r_hat.col_sq_norms()).expect("squared norms are non-negative")
}
