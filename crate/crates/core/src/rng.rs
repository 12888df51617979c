//! Counter-based random streams.
//!
//! Every stream is a pure function of a 64-bit key, and the key of matrix
//! entry `(i, j)` is derived from `(seed, i, j)` by a stateless mix. Entries can
//! therefore be generated in any order, or in parallel, with identical results.

use std::convert::Infallible;

use rand::rand_core::TryRng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output finalizer (Stafford variant 13).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stateless derivation of a child seed from a parent seed and an index.
#[inline]
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(mix64(parent ^ GOLDEN_GAMMA).wrapping_add(index.wrapping_mul(GOLDEN_GAMMA)))
}

/// Key for entry `(i, j)` of a matrix sampled with `seed`.
#[inline]
pub fn entry_key(seed: u64, i: usize, j: usize) -> u64 {
    derive_seed(derive_seed(seed, i as u64), j as u64)
}

/// A SplitMix64 stream: output `k` is `mix64(key + (k + 1)·γ)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key: mix64(key), counter: 0 }
    }

    /// Stream for matrix entry `(i, j)`.
    pub fn for_entry(seed: u64, i: usize, j: usize) -> Self {
        Self::new(entry_key(seed, i, j))
    }

    #[inline]
    pub fn next_word(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        (self.next_word() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `(0, 1)`; never returns 0.
    #[inline]
    pub fn next_open_unit(&mut self) -> f64 {
        ((self.next_word() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
    }

    /// Uniform index in `0..bound` (Lemire's multiply-shift, bias < 2^-64·bound).
    #[inline]
    pub fn next_index(&mut self, bound: usize) -> usize {
        ((self.next_word() as u128 * bound as u128) >> 64) as usize
    }
}

impl TryRng for CounterRng {
    type Error = Infallible;

    fn try_next_u32(&mut self) -> Result<u32, Infallible> {
        Ok((self.next_word() >> 32) as u32)
    }

    fn try_next_u64(&mut self) -> Result<u64, Infallible> {
        Ok(self.next_word())
    }

    fn try_fill_bytes(&mut self, dst: &mut [u8]) -> Result<(), Infallible> {
        for chunk in dst.chunks_mut(8) {
            let w = self.next_word().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
        Ok(())
    }
}
