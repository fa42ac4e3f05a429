//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 keystream selected by `(seed, trial, purpose)`;
//! draws within a stream are the block counter. A trial's numbers never depend
//! on which thread ran it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share keystream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Event = 1,
    Capability = 2,
}

pub fn substream(seed: u64, trial: u64, purpose: u8) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 8) | u64::from(purpose));
    rng
}

pub fn stream(seed: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    substream(seed, trial, purpose as u8)
}
