//! Discretized Brownian paths with counter-based seeding.
//!
//! Every path is generated from its own substream: the generator for
//! `SeedSpec { master_seed, stream_index }` is `ChaCha8Rng` seeded (via
//! `SeedableRng::seed_from_u64`) with `derive_seed(master_seed, stream_index)`.
//! Increments are drawn coordinate by coordinate, step by step, as
//! `sqrt(dt)·z` with `z` from `rand_distr::StandardNormal`. A path therefore
//! depends only on its seed, never on which worker produced it or when.
//!
//! `derive_seed` is SplitMix64-style:
//!
//! ```text
//! mix(z)  = z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!           z ^= z >> 27; z *= 0x94D049BB133111EB;
//!           z ^ (z >> 31)
//! derive(master, index) = mix(mix(master) + (index + 1) * 0x9E3779B97F4A7C15)
//! ```
//!
//! with wrapping 64-bit arithmetic. For a fixed master the map is a
//! bijection of the index, so distinct indices never collide.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for substream `index` of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master).wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Generator for a substream.
pub fn stream_rng(seed: SeedSpec) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed.master_seed, seed.stream_index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }
}

/// A d-dimensional path on the uniform grid t_i = i·t_max/n_steps.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    d: usize,
    t_max: f64,
    n_steps: usize,
    /// (n_steps + 1) points, row-major.
    positions: Vec<f64>,
}

impl BrownianPath {
    /// Wraps explicit positions, e.g. for deterministic test paths.
    pub fn from_positions(d: usize, t_max: f64, positions: Vec<f64>) -> Result<Self> {
        if d == 0 || !positions.len().is_multiple_of(d) || positions.len() < 2 * d {
            return Err(Error::input("positions must hold at least two points of dimension d"));
        }
        if !(t_max > 0.0) {
            return Err(Error::input(format!("t_max must be positive, got {t_max}")));
        }
        let n_steps = positions.len() / d - 1;
        Ok(Self {
            d,
            t_max,
            n_steps,
            positions,
        })
    }

    /// The path that never moves.
    pub fn stationary(d: usize, t_max: f64, n_steps: usize) -> Result<Self> {
        Self::from_positions(d, t_max, vec![0.0; (n_steps + 1) * d])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.n_steps as f64
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.positions[i * self.d..(i + 1) * self.d]
    }

    pub fn endpoint(&self) -> &[f64] {
        self.point(self.n_steps)
    }

    /// The left-endpoint points t_0, …, t_{n−1} used by the Riemann sums.
    pub(crate) fn left_points(&self) -> &[f64] {
        &self.positions[..self.n_steps * self.d]
    }

    /// Same path shifted by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.d {
            return Err(Error::input("offset dimension mismatch"));
        }
        let mut positions = self.positions.clone();
        for p in positions.chunks_mut(self.d) {
            for (x, o) in p.iter_mut().zip(offset) {
                *x += o;
            }
        }
        Ok(Self { positions, ..*self })
    }

    pub(crate) fn same_grid(&self, other: &Self) -> bool {
        self.d == other.d && self.n_steps == other.n_steps && self.t_max == other.t_max
    }
}

/// Samples a Brownian path from the origin.
pub fn sample_path(d: usize, t_max: f64, n_steps: usize, seed: SeedSpec) -> Result<BrownianPath> {
    if n_steps == 0 {
        return Err(Error::input("n_steps must be at least 1"));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::input(format!("t_max must be positive, got {t_max}")));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::input(format!("dimension must be 1, 2 or 3, got {d}")));
    }
    let mut rng = stream_rng(seed);
    let sd = (t_max / n_steps as f64).sqrt();
    let mut positions = Vec::with_capacity((n_steps + 1) * d);
    positions.extend(std::iter::repeat_n(0.0, d));
    for i in 0..n_steps {
        for c in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            let prev = positions[i * d + c];
            positions.push(prev + sd * z);
        }
    }
    Ok(BrownianPath {
        d,
        t_max,
        n_steps,
        positions,
    })
}
