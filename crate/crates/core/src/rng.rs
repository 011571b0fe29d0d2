//! Per-purpose random streams derived from one master seed.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed; the 64-bit
//! stream id is `purpose << 40 | index`. Streams never overlap, so chains and
//! sweep cells can run in any order or concurrently and still reproduce the
//! same draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DERIVATION: &str = "chacha8(master_seed), stream = purpose << 40 | index";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    DlgChain = 1,
    LangevinChain = 2,
    ClassifierData = 4,
    ClassifierFeatures = 5,
    ClassifierTraining = 6,
    GroundTruth = 7,
    Benchmark = 8,
    Ablation = 9,
    HeldOut = 10,
}

pub fn stream(master_seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << 40);
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((purpose as u64) << 40) | index);
    rng
}

/// Derives a child seed, used where a whole sub-experiment needs its own
/// master seed (for instance one ablation cell).
pub fn child_seed(master_seed: u64, purpose: Purpose, index: u64) -> u64 {
    use rand::RngCore;
    stream(master_seed, purpose, index).next_u64()
}
