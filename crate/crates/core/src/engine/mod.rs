//! Stochastic CTQRW realizations, ensemble statistics and the renewal
//! series `ρ(t) = Σ P_n(t) Eⁿ[ρ(0)]`.

mod ensemble;
mod renewal;
mod seed;
mod trajectory;

pub use ensemble::{ensemble_average, EnsembleAccumulator, EnsembleOptions, EnsembleStats, ObservableStats};
pub use renewal::{renewal_probabilities, series_solution, RenewalProbabilities, SeriesSolution, SERIES_TAIL_TOL};
pub use seed::{split_seed, splitmix64};
pub use trajectory::{run_realization, Observable, RealizationOptions, Scattering, Trajectory};

use crate::grid::GridError;
use crate::kernels::KernelError;
use crate::quantum::QuantumError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("operation needs a uniform grid starting at 0")]
    NonUniformGrid,
    #[error("renewal convolution failed its self-consistency check: {0}")]
    GridTooCoarse(String),
    #[error("series truncation tail {tail:e} exceeds tolerance {tolerance:e}")]
    TruncationTooTight { tail: f64, tolerance: f64 },
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}
