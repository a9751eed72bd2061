//! Per-user random substreams.
//!
//! Every user draws from its own ChaCha stream keyed by (master seed, user id,
//! purpose), so adding users to a scenario never shifts another user's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Channel = 0,
    Traffic = 1,
    Scheduler = 2,
}

const PURPOSES: u64 = 4;

pub fn substream(master_seed: u64, user_id: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(user_id as u64 * PURPOSES + purpose as u64);
    rng
}

/// Stream for frame-level decisions not tied to a user.
pub fn global_stream(master_seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(u64::MAX);
    rng
}
