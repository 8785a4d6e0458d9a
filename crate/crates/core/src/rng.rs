//! Seed handling shared by every stochastic driver.
//!
//! All randomness derives from one 64-bit seed. Independent members of an
//! ensemble get their own ChaCha stream (`stream = run_id`) over the same key,
//! so run `k` is reproducible without replaying runs `0..k`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for a single run.
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for member `stream` of an ensemble rooted at `seed`.
pub fn split(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
