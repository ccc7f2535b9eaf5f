//! Deterministic random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Each role of each replicate gets its own
/// ChaCha stream under the run's key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamRole {
    Covariate = 0,
    EventTime = 1,
    Censoring = 2,
    CovariateNoise = 3,
    TauOracle = 4,
    TruthOracle = 5,
}

const ROLES: u64 = 8;

pub fn stream(seed: u64, index: u64, role: StreamRole) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_mul(ROLES).wrapping_add(role as u64));
    rng
}
