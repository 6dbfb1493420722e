//! Seeded, splittable random streams.
//!
//! Every trial owns a ChaCha20 stream keyed by the master seed and selected by
//! a 64-bit stream id built from `(point, trial)`. Streams never overlap, so
//! trials can run in any order or on any thread and still draw the same
//! numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

pub type TrialRng = ChaCha20Rng;

/// Where a stream came from. Enough to regenerate it bit for bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub stream: u64,
}

impl SeedRecord {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    /// Stream for trial `trial` of grid point `point`.
    pub fn for_trial(master: u64, point: u32, trial: u32) -> Self {
        Self::new(master, (u64::from(point) << 32) | u64::from(trial))
    }

    pub fn rng(&self) -> TrialRng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}
