//! Named, independent random streams derived from one 64-bit seed.
//!
//! Each source of randomness (user drops, shadowing, fading, requests,
//! randomized extraction) draws from its own ChaCha stream, so disabling or
//! resampling one source never shifts the numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Drops,
    Scheduling,
    Shadowing,
    Fading,
    Requests,
    Randomization,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Drops => 1,
            Stream::Scheduling => 2,
            Stream::Shadowing => 3,
            Stream::Fading => 4,
            Stream::Requests => 5,
            Stream::Randomization => 6,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}
