//! Portable seeded randomness.
//!
//! The generator is xoshiro256** (Blackman & Vigna) with its state expanded
//! from a 64-bit seed by SplitMix64. Everything drawn from it is derived here
//! from raw 64-bit outputs, so a corpus or split can be reproduced by any
//! implementation of the same three rules:
//!
//! - `unit()`: `(next_u64 >> 11) * 2^-53`, uniform in `[0, 1)`
//! - `below(n)`: high 64 bits of the 128-bit product `next_u64 * n`
//! - `shuffle`: Fisher-Yates from the last index down, `j = below(i + 1)`
//!
//! Components sharing a seed draw from separate streams: stream `k` starts
//! `k` jumps of 2^128 steps after the seeded state.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Debug, Clone)]
pub struct SeededRng(Xoshiro256StarStar);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(Xoshiro256StarStar::seed_from_u64(seed))
    }

    /// Generator for stream `stream` of `seed`; stream 0 equals [`SeededRng::new`].
    pub fn stream(seed: u64, stream: u32) -> Self {
        let mut inner = Xoshiro256StarStar::seed_from_u64(seed);
        for _ in 0..stream {
            inner.jump();
        }
        SeededRng(inner)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. `n` must be non-zero.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.below(hi - lo + 1)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len() as u64) as usize]
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
