//! Portable, seed-determined random draws.
//!
//! All stochastic choices in the crate go through [`DrawStream`]. The
//! underlying generator is ChaCha8 seeded with `SeedableRng::seed_from_u64`,
//! and every derived draw below is specified here rather than delegated to
//! a distribution library, so a seed reproduces the same stream on every
//! platform and can be re-implemented elsewhere:
//!
//! - `below(n)`: rejection sampling on raw `u64` words; values at or above
//!   `floor(2^64 / n) * n` are discarded, the rest reduced modulo `n`.
//! - `unit()`: the top 53 bits of one `u64` word scaled by `2^-53`.
//! - `weighted(w)`: one `unit()` draw scaled by `sum(w)` and matched
//!   against the running cumulative sum, left to right.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone)]
pub struct DrawStream(ChaCha8Rng);

impl DrawStream {
    pub fn from_seed(seed: u64) -> Self {
        DrawStream(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = (u64::MAX / n) * n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Uniform integer in `lo..=hi`.
    pub fn between(&mut self, lo: u32, hi: u32) -> u32 {
        debug_assert!(lo <= hi);
        lo + self.below(u64::from(hi - lo) + 1) as u32
    }

    /// Uniform integer in `lo..=hi` other than `avoid`, or `None` when the
    /// range holds no other value.
    pub fn between_except(&mut self, lo: u32, hi: u32, avoid: u32) -> Option<u32> {
        if !(lo..=hi).contains(&avoid) {
            return Some(self.between(lo, hi));
        }
        if lo == hi {
            return None;
        }
        let v = lo + self.below(u64::from(hi - lo)) as u32;
        Some(if v >= avoid { v + 1 } else { v })
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.index(items.len())]
    }

    /// Index drawn proportionally to `weights` (need not sum to one).
    /// Zero-weight entries are never chosen. Returns `None` if every weight
    /// is zero.
    pub fn weighted(&mut self, weights: &[f64]) -> Option<usize> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let r = self.unit() * total;
        let mut acc = 0.0;
        let mut last = None;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = Some(i);
            if r < acc {
                return Some(i);
            }
        }
        last
    }
}
