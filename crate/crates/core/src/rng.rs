//! Deterministic random substreams.
//!
//! Every random consumer draws from a ChaCha8 stream keyed by the run seed
//! and a 64-bit stream id. The id packs a purpose tag and a chunk (or probe)
//! index, so chunked parallel work is reproducible regardless of how many
//! worker threads execute it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Points drawn per sampling chunk. Fixed so that output does not depend on
/// the number of workers.
pub const CHUNK_SIZE: usize = 1 << 14;

/// Independent purposes sharing one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Sampling = 1,
    Gain = 2,
    Bootstrap = 3,
    Moment = 4,
}

/// Generator for `(seed, purpose, index)`.
pub fn substream(seed: u64, purpose: Purpose, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) | (index & ((1 << 48) - 1)));
    rng
}

/// Uniform draw in `(0, 1]`.
pub fn open_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}
