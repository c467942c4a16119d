//! Counter-based random streams derived from one master seed.
//!
//! Every trial owns a handful of independent ChaCha streams addressed by
//! `(trial, purpose)`, so adding trials or changing the thread count never
//! perturbs the draws of existing trials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    ChannelMeans = 0,
    DesignInit = 1,
    Realizations = 2,
    Symbols = 3,
}

const PURPOSES: u64 = 4;

pub fn trial_rng(master_seed: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial * PURPOSES + purpose as u64);
    rng
}
