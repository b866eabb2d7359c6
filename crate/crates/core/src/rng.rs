//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`), seeded
//! with the caller's 64-bit seed through `SeedableRng::seed_from_u64`, with a
//! separate ChaCha stream id per purpose. Two purposes never share a stream,
//! so e.g. changing the number of noise draws cannot shift the subspace.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name recorded alongside generated fixtures.
pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64/stream-per-purpose";

/// Purpose tags; the discriminant is the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Subsample = 1,
    KMeansSeed = 2,
    MiniBatch = 3,
    Subspace = 10,
    ClusterCenters = 11,
    Draws = 12,
    Noise = 13,
    Scores = 14,
    ModelSeeds = 15,
}

pub fn stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}
