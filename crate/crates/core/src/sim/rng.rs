//! Per-run random streams.
//!
//! Every run gets a ChaCha8 generator keyed by the master seed (expanded by
//! `seed_from_u64`) with the run index as the 64-bit stream id. Streams are
//! disjoint by construction, so a run's draws depend only on
//! `(seed, run)` and never on scheduling.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct RunRng(ChaCha8Rng);

impl RunRng {
    pub fn new(seed: u64, run: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run);
        Self(rng)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `0..n` by rejection, so exactly unbiased.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.0.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }
}
