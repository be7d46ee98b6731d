//! Seedable, splittable randomness. Every stochastic operation takes a seed
//! and a stream id so that runs are reproducible whatever the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const COLORING_STREAM: u64 = 0;
pub const MIXTURE_STREAM: u64 = 1;
pub const SAMPLE_STREAM_BASE: u64 = 1 << 32;

pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Stream for batch `batch` of epoch `epoch`; distinct from the coloring stream.
pub fn sample_stream(seed: u64, epoch: u64, batch: u64) -> StreamRng {
    stream(seed, SAMPLE_STREAM_BASE + (epoch << 20) + batch)
}
