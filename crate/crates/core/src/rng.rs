//! Counter-based random streams.
//!
//! Every unit of work (a Monte Carlo trial, a random channel sequence) gets
//! its own ChaCha8 stream keyed by `(master_seed, index)`, so results do not
//! depend on scheduling or on how many workers ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream number `index` under `master_seed`.
pub fn stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
