//! Reproducible random streams.
//!
//! Every replica owns a ChaCha8 key derived from `(seed, replica)` through a
//! SplitMix64 finalizer. Independent uses of randomness within a replica read
//! from distinct ChaCha stream ids, so the draws of one replica never depend
//! on how many replicas run or on which worker runs them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids within one replica key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Initial positions: per sample, component selector then uniform.
    Initial = 0,
    /// Brownian increments: step-major, particle index ascending.
    Brownian = 1,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a lane index (replica or chunk) into a base seed.
pub fn derive_seed(seed: u64, lane: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ lane.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn replica_rng(seed: u64, replica: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, replica));
    rng.set_stream(stream as u64);
    rng
}
