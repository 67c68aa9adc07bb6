//! Seeded, splittable randomness.
//!
//! Everything random in this crate flows through ChaCha8 with one independent
//! substream per (replicate, problem), selected as `set_stream(k << 32 | j)`.
//! Work scheduled across any number of threads therefore produces identical
//! bytes as long as each (replicate, problem) cell is processed by exactly
//! one task.
//!
//! Uniform deviates come from an explicit 53-bit ladder and normal deviates
//! from the Marsaglia polar transform, so the byte-for-byte behavior is
//! pinned by this crate rather than by distribution crates.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// RNG for the (replicate `k`, problem `j`) cell of a run seeded with `seed`.
pub fn substream(seed: u64, k: u32, j: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((k as u64) << 32) | j as u64);
    rng
}

/// Uniform on the open interval (0, 1), 53-bit resolution. Never returns an
/// endpoint, so transforms that take logs are safe.
pub fn unit_open(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Uniform on (lo, hi).
pub fn uniform(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit_open(rng)
}

/// Standard-normal sampler: Marsaglia polar method with the spare deviate
/// cached, so consecutive draws from one substream cost one transform per
/// pair.
pub struct NormalSampler {
    spare: Option<f64>,
}

impl NormalSampler {
    pub fn new() -> Self {
        Self { spare: None }
    }

    pub fn sample(&mut self, rng: &mut impl RngCore) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        loop {
            let u = 2.0 * unit_open(rng) - 1.0;
            let v = 2.0 * unit_open(rng) - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let mult = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * mult);
                return u * mult;
            }
        }
    }
}

impl Default for NormalSampler {
    fn default() -> Self {
        Self::new()
    }
}

/// Fisher-Yates permutation of 0..len driven by `rng`. Index sampling uses
/// rejection on the low bits, so the draw count is data independent of
/// platform word size.
pub fn permutation(rng: &mut impl RngCore, len: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    for i in (1..len).rev() {
        let j = bounded_index(rng, i as u64 + 1) as usize;
        idx.swap(i, j);
    }
    idx
}

fn bounded_index(rng: &mut impl RngCore, bound: u64) -> u64 {
    // Unbiased: draw from the largest multiple of `bound` below 2^64.
    let zone = u64::MAX - u64::MAX % bound;
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % bound;
        }
    }
}
