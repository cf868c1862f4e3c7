//! Counter-based random sub-streams derived from one master seed.
//!
//! Every consumer draws from its own ChaCha stream, so adding a flow or an
//! agent never shifts the draws seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Traffic = 1,
    Exploration = 2,
    Replay = 3,
    Init = 4,
    Probe = 5,
}

pub fn substream(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 48) ^ index);
    rng
}
