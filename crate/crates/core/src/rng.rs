//! Deterministic random streams.
//!
//! Every consumer of randomness derives its generator from a user seed plus a
//! fixed stream id, so that e.g. the realization sampler and the Monte Carlo
//! estimator never share random numbers for the same seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const STREAM_REALIZATION: u64 = 1;
pub(crate) const STREAM_ESTIMATOR: u64 = 2;
pub(crate) const STREAM_EPSILON: u64 = 3;
pub(crate) const STREAM_COIN: u64 = 4;
pub(crate) const STREAM_PROBABILITIES: u64 = 5;
pub(crate) const STREAM_COSTS: u64 = 6;
pub(crate) const STREAM_GENERATOR: u64 = 7;
pub(crate) const STREAM_INSTANCES: u64 = 8;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
