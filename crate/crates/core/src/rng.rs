//! Seeded, splittable random streams.
//!
//! Every chain owns one [`RngStream`]. A stream is a ChaCha8 generator keyed
//! by a 64-bit seed with a 64-bit stream selector, so distinct
//! `(seed, stream)` pairs never overlap and identical pairs replay the same
//! sequence on any platform and thread count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Stream id for chain `chain` of a model with `k` change points.
    pub fn chain_stream_id(k: usize, chain: usize) -> u64 {
        ((k as u64) << 32) | chain as u64
    }

    /// Child stream for an auxiliary task (forecast noise, jittered starts)
    /// that must not share draws with the chain that spawned it.
    pub fn derive(&self, tag: u64) -> Self {
        let mixed = self
            .stream
            .rotate_left(17)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ tag.wrapping_add(0xD1B5_4A32_D192_ED03);
        Self::new(self.seed, mixed)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
