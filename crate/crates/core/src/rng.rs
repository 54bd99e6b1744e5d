//! Deterministic random streams.
//!
//! Every random quantity in the crate is drawn from ChaCha8. A replicate `r`
//! of a run with master seed `s` uses the generator seeded from `s` with its
//! stream id set to `r`, so replicate results do not depend on which worker
//! thread ran them or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator type used throughout.
pub type SimRng = ChaCha8Rng;

/// Name written into output metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8(seed_from_u64,stream=replicate)";

/// Default master seed used by the CLI when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_200_601;

/// Stream 0 of `seed`. Single runs use this.
pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Independent stream for replicate `replicate` under `master_seed`.
pub fn replicate_rng(master_seed: u64, replicate: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    rng
}
