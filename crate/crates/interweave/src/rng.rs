//! Seeded, splittable random streams.
//!
//! Every stochastic operation in this crate takes a `&mut Stream` explicitly;
//! there is no global RNG. Streams are backed by ChaCha12 (counter-based, so
//! reproducible across platforms) and can be split into statistically
//! independent substreams for parallel Monte-Carlo work: substream `i` of a
//! stream is a pure function of `(seed, path, i)`, independent of how many
//! draws were taken from the parent.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// A seeded random stream.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha12Rng,
    seed: u64,
    path: u64,
}

impl Stream {
    /// Root stream for a 64-bit seed.
    pub fn seeded(seed: u64) -> Self {
        Stream { rng: ChaCha12Rng::seed_from_u64(seed), seed, path: 0 }
    }

    /// Derives the `i`-th substream. Deterministic in `(seed, path, i)` and
    /// disjoint from the parent's own draw sequence.
    pub fn substream(&self, i: u64) -> Self {
        // splitmix64-style mixing of (seed, path, i) into a fresh seed
        let mut z = self
            .seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(self.path.rotate_left(17))
            .wrapping_add(i.wrapping_mul(0xbf58_476d_1ce4_e5b9));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        let mut rng = ChaCha12Rng::seed_from_u64(z);
        rng.set_stream(i.wrapping_add(1));
        Stream { rng, seed: z, path: self.path.wrapping_mul(31).wrapping_add(i).wrapping_add(1) }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw in `(0, 1]` (safe as an argument to `ln`).
    pub fn uniform_open(&mut self) -> f64 {
        1.0 - self.rng.random::<f64>()
    }

    /// Standard exponential variate.
    pub fn exponential(&mut self) -> f64 {
        -self.uniform_open().ln()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}
