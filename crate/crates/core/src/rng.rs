//! Reproducible random streams.
//!
//! A run owns one ChaCha8 key derived from its seed. Each (step, channel)
//! pair reads its own stream, so results do not depend on the order in which
//! channels or observables are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const INIT_BIT: u64 = 1 << 63;
const AUX_BIT: u64 = 1 << 62;
const CHANNEL_BITS: u32 = 16;

/// Stream for the collisions of `channel` during step `step`.
pub fn step_stream(seed: u64, step: u64, channel: usize) -> ChaCha8Rng {
    debug_assert!(channel < (1 << CHANNEL_BITS));
    debug_assert!(step < (AUX_BIT >> CHANNEL_BITS));
    stream(seed, (step << CHANNEL_BITS) | channel as u64)
}

/// Stream for drawing the initial velocities of species `species`.
pub fn init_stream(seed: u64, species: usize) -> ChaCha8Rng {
    stream(seed, INIT_BIT | species as u64)
}

/// Stream for auxiliary sampling (verification campaigns, estimators).
pub fn aux_stream(seed: u64, index: u64) -> ChaCha8Rng {
    stream(seed, AUX_BIT | index)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
