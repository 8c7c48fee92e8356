//! Fixed points of the networked Kuramoto model.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`] builds the networks (complete, circulant ring, ring-tree, dense random).
//! - [`dynamics`] evaluates and integrates `θ̇_i = ω_i + k Σ_j A_ij sin(θ_j − θ_i)`.
//! - [`fixedpoint`] holds the fixed-point residual, a grounded Newton solver and the
//!   twisted-state family.
//! - [`stability`] forms the linearisation matrix, classifies it spectrally and searches
//!   for negative cuts, which certify instability.
//! - [`experiments`] drives the numerical reproductions: ring sweeps, threshold roots,
//!   the dense-network constant chain, basin sampling and multistability counts.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fixedpoint;
pub mod graph;
pub mod linalg;
mod sampling;
pub mod stability;

pub use dynamics::{ModelParams, OrderParameter, PhaseState};
pub use error::{Error, Result};
pub use fixedpoint::{FixedPoint, NewtonOptions};
pub use graph::Network;
pub use stability::{Classification, CutCertificate, CutSearch, JacobianMatrix, StabilityReport};
