//! Seedable, splittable random streams.
//!
//! Every source of randomness in a protocol run (party choices, measurement
//! collapse, the adversary) draws from its own [`RandomStream`], derived from
//! the run seed and a fixed stream id. Runs therefore replay bit-exactly, and
//! turning one actor's behaviour on or off never shifts another actor's draws.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream ids for the independent actors of a protocol run.
pub mod streams {
    pub const ALICE: u64 = 1;
    pub const BOB: u64 = 2;
    pub const EVE: u64 = 3;
    pub const NATURE: u64 = 4;
    pub const FILLER: u64 = 5;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomStream {
    inner: ChaCha8Rng,
}

impl RandomStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The `stream`-th independent substream of `seed`.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Splits off a child stream seeded from this one's output.
    pub fn split(&mut self) -> Self {
        Self::from_seed(self.inner.next_u64())
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}
