//! Seeded, counter-based random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name of the generator, recorded next to every seed in result files.
pub const RNG_NAME: &str = "ChaCha8";

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-stream for one work item (node, trial, ...).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    seed ^ index
}
