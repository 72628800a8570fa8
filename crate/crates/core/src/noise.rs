//! Uniform time grids and seeded Brownian increments.
//!
//! Increments come from ChaCha8 keyed by a 64-bit seed, mapped to standard
//! normals by the `rand_distr` ziggurat sampler and scaled by `√dt`. The
//! combination is frozen as [`GENERATOR_VERSION`]; any change to it must bump
//! the tag because stored acceptance outputs depend on the exact stream.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{param_err, Result};

pub const GENERATOR_VERSION: &str = "chacha8-ziggurat-v1";

/// `n_steps` equal steps covering `[0, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(param_err!("t_end must be positive and finite, got {t_end}"));
        }
        if n_steps == 0 {
            return Err(param_err!("n_steps must be positive"));
        }
        Ok(Self { t_end, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    /// `t_k = k·dt`, with `t_{n_steps}` pinned to `t_end`.
    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |k| self.node(k))
    }

    /// Grid with `factor` times fewer steps over the same horizon.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.n_steps.is_multiple_of(factor) {
            return Err(param_err!("cannot coarsen {} steps by a factor of {factor}", self.n_steps));
        }
        Self::new(self.t_end, self.n_steps / factor)
    }
}

/// Brownian increments `ΔB_k = B(t_{k+1}) - B(t_k)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    grid: TimeGrid,
    increments: Vec<f64>,
    seed: u64,
}

impl BrownianPath {
    pub fn from_increments(grid: TimeGrid, increments: Vec<f64>, seed: u64) -> Result<Self> {
        if increments.len() != grid.n_steps() {
            return Err(param_err!("{} increments supplied for a grid of {} steps", increments.len(), grid.n_steps()));
        }
        Ok(Self { grid, increments, seed })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `B(t_k)` for every node, starting from `B(0) = 0`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.increments.len() + 1);
        let mut b = 0.0;
        out.push(b);
        for d in &self.increments {
            b += d;
            out.push(b);
        }
        out
    }

    /// The same Brownian path seen on a grid `factor` times coarser: each
    /// coarse increment is the sum of `factor` consecutive fine ones.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsen(factor)?;
        let increments = self.increments.chunks(factor).map(|c| c.iter().sum()).collect();
        Ok(Self { grid, increments, seed: self.seed })
    }
}

/// Draws `n_steps` independent `N(0, dt)` increments keyed by `seed`.
pub fn sample_brownian_increments(grid: TimeGrid, seed: u64) -> BrownianPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = libm::sqrt(grid.dt());
    let increments = (0..grid.n_steps())
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * sd
        })
        .collect();
    BrownianPath { grid, increments, seed }
}

/// Per-path seed: SplitMix64 finalizer applied to
/// `master + (index + 1)·0x9E3779B97F4A7C15`.
///
/// For a fixed master seed the map is injective in `index` (an odd-constant
/// Weyl step followed by a bijective mixer).
pub fn derive_path_seed(master_seed: u64, path_index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(path_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
