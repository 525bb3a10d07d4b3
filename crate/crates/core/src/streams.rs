//! Named random streams. Every consumer of randomness gets its own ChaCha
//! stream derived from the run seed, so per-agent environment draws stay
//! aligned across independent implementations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ENV: u64 = 0;
const POLICY: u64 = 1 << 32;
const DRIVER: u64 = 2 << 32;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Slip draws of agent `agent`'s environment.
pub fn env_stream(seed: u64, agent: usize) -> ChaCha8Rng {
    stream(seed, ENV + agent as u64)
}

/// Exploration draws of agent `agent`'s learner.
pub fn policy_stream(seed: u64, agent: usize) -> ChaCha8Rng {
    stream(seed, POLICY + agent as u64)
}

/// Action choices of test drivers (oracle comparison, fuzzing).
pub fn driver_stream(seed: u64) -> ChaCha8Rng {
    stream(seed, DRIVER)
}

pub fn env_streams(seed: u64, agents: usize) -> Vec<ChaCha8Rng> {
    (0..agents).map(|i| env_stream(seed, i)).collect()
}
