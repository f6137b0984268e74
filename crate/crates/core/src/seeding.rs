//! Reproducible random streams.
//!
//! Every independent unit of work (a seesaw restart, a setting pair, a
//! Monte-Carlo draw) gets its own ChaCha stream keyed by the master seed,
//! so results do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0;

/// Generator for work item `index` under `seed`.
pub fn substream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}
