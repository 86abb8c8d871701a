//! Seed splitting for reproducible parallel Monte Carlo.
//!
//! Every run has one master seed. Independent streams are ChaCha8 generators
//! keyed by the master seed, with the ChaCha stream id set to
//! `(purpose << 48) | index`. A trial draws only from its own stream, so the
//! results are identical for any thread count or scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Namespaces keeping streams of different pipeline stages disjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Atoms = 1,
    Trial = 2,
    Shot = 3,
    Fringe = 4,
    Synthetic = 5,
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    debug_assert!(index < (1 << 48));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) | index);
    rng
}
