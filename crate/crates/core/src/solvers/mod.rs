//! Deterministic solution routes for `dρ/dt = ∫₀ᵗ K(t−τ) L[ρ(τ)] dτ`.

mod closed;
mod cp;
mod decay;
mod entropy;
mod subordination;
mod volterra;

pub use closed::closed_form_solve;
pub use cp::{cp_defect_over_time, propagate, SolutionRoute};
pub use decay::{relaxation, telegraph_h, DecayFunction};
pub use entropy::{short_time_entropy, ShortTimeEntropy};
pub use subordination::{subordination_pdf, subordination_solve, SubordinationDensity};
pub use volterra::{telegraph_ode_solve, volterra_solve};

use crate::engine::EngineError;
use crate::grid::GridError;
use crate::kernels::KernelError;
use crate::quantum::QuantumError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("kernel not supported by this route: {0}")]
    UnsupportedKernel(String),
    #[error("dangerous kernel refused: {0}")]
    DangerousKernel(String),
    #[error("kernel has no subordination density: {0}")]
    NoSubordinationDensity(String),
    #[error("this route needs a uniform grid starting at t = 0")]
    NonUniformGrid,
    #[error("unstable step: trace drifted by {drift:e} (limit 1e-6)")]
    UnstableStep { drift: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}
