//! Seeded randomness. Every simulation draws from a [`SimRng`] created here,
//! and per-run seeds are derived from a master seed so that runs are
//! independent of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random source used throughout the crate.
pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Independent seed streams carved out of one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Topology = 0,
    Protocol = 1,
    Model = 2,
    Occupancy = 3,
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed of run `index` in `stream`:
/// `mix64(master + GOLDEN_GAMMA * (stream * 2^32 + index + 1))`.
pub fn derive_seed(master: u64, stream: Stream, index: u64) -> u64 {
    let slot = ((stream as u64) << 32).wrapping_add(index).wrapping_add(1);
    mix64(master.wrapping_add(GOLDEN_GAMMA.wrapping_mul(slot)))
}
