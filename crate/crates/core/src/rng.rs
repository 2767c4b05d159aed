//! Reproducible random streams.
//!
//! Every chain (or path, or auxiliary consumer) owns a ChaCha8 stream keyed by
//! the master seed and selected by a 64-bit stream id. ChaCha is a counter-mode
//! generator, so stream `i` is a pure function of `(master_seed, i)` and results
//! do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream ids at or above this value are reserved for non-chain consumers.
const AUX_BASE: u64 = 1 << 63;

/// Stream for chain (or path) `index`.
pub fn chain_stream(master_seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Auxiliary stream (reference samples, projections, ...) tagged by `tag`.
pub fn aux_stream(master_seed: u64, tag: AuxTag) -> Stream {
    chain_stream(master_seed, AUX_BASE | tag as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum AuxTag {
    Reference = 1,
    Projections = 2,
    Validation = 3,
}
