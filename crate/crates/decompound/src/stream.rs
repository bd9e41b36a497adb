//! Reproducible random streams.
//!
//! Every randomized operation takes an explicit [`RandomStream`]. Replicate
//! `r` of an experiment draws from `RandomStream::derive(seed, r)`; distinct
//! stream ids select disjoint ChaCha streams of the same seed, so replicates
//! can run in parallel without sharing generator state and results do not
//! depend on execution order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha12Rng,
    seed: u64,
    stream: u64,
}

impl RandomStream {
    /// Stream 0 of the given seed.
    pub fn new(seed: u64) -> Self {
        Self::derive(seed, 0)
    }

    /// Stream `stream` of the given seed.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RandomStream {
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
