//! Fixed inputs for the kernel benchmarks.

use kfp_core::fixedpoint::twisted_state;
use kfp_core::{Network, PhaseState};

/// Ring of `n` nodes with degree `d` and its single-twist state.
pub fn twisted_ring(n: usize, d: usize) -> (Network, PhaseState) {
    (
        Network::wsg(n, d).expect("valid ring degree"),
        twisted_state(n, 1),
    )
}

/// Deterministic, non-symmetric phases on `n` nodes.
pub fn scattered_state(n: usize) -> PhaseState {
    PhaseState::new((0..n).map(|i| (i as f64 * 2.399_963).sin() * 3.0).collect())
}
