//! Continuous-time quantum random walks (CTQRW) and the non-Markovian,
//! completely positive master equations they generate.
//!
//! A CTQRW applies a fixed Kraus map `E` at the events of a renewal
//! process. Averaged over realizations the state obeys
//! `dρ/dt = ∫₀ᵗ K(t−τ) L[ρ(τ)] dτ` with `L = E − I`, where the memory
//! kernel `K` and the waiting-time density `w` are related through
//! `K̃(u) = u w̃(u) / (1 − w̃(u))`.
//!
//! Modules:
//! - [`quantum`]: states, channels, generators, Choi matrices, damping bases.
//! - [`kernels`]: memory kernels, waiting-time laws, Mittag-Leffler, samplers.
//! - [`engine`]: stochastic realizations, ensembles, renewal series.
//! - [`solvers`]: closed forms, Volterra quadrature, subordination, CP audits.
//! - [`models`]: qubit reservoirs, phase-space walks, intrinsic decoherence.

pub mod engine;
pub mod grid;
pub mod kernels;
pub mod linalg;
pub mod models;
pub mod numerics;
pub mod quantum;
pub mod solvers;
pub mod states;

pub use grid::TimeGrid;
pub use linalg::{CMat, CVec};
pub use states::StateTrajectory;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
