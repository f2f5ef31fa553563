//! Seeded random streams.
//!
//! Every stochastic step takes a `(seed, stream)` pair so that parallel work
//! (one tree, one fold, one grid point) draws from its own ChaCha stream and
//! the result does not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream ids for the different consumers of a single user seed.
pub mod stream {
    pub const SPLIT: u64 = 1;
    pub const GENERATOR: u64 = 2;
    pub const FOLDS: u64 = 3;
    pub const LEARNING_CURVE: u64 = 4;
    /// Forest trees use `TREES + tree_index`.
    pub const TREES: u64 = 1 << 32;
}

pub fn seeded(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
