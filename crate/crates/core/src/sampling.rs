//! Counter-based random streams: trial `t` of seed `s` always draws the same numbers,
//! whatever order trials are run in.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` phases drawn uniformly on `(−π, π]`.
pub(crate) fn uniform_phases(n: usize, seed: u64, trial: u64) -> Vec<f64> {
    // stream 0 is reserved for graph generation
    let mut rng = stream_rng(seed, trial + 1);
    (0..n)
        .map(|_| PI - 2.0 * PI * rng.random::<f64>())
        .collect()
}
