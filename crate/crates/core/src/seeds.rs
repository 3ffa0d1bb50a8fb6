//! Named random sub-streams derived from a single 64-bit seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Structure,
    Params,
    Sampler,
    Triplets,
    Eda,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Structure => 1,
            Stream::Params => 2,
            Stream::Sampler => 3,
            Stream::Triplets => 4,
            Stream::Eda => 5,
        }
    }
}

/// Generator for `stream` under `seed`. Streams never overlap.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
