//! Physical models: qubit reservoirs, Fock-space random walks and
//! intrinsic decoherence.

mod fock;
mod intrinsic;
mod qubit;
mod wigner;

pub use fock::{annihilation, creation, number_operator, second_order_generator, top_population, FOCK_DIM_DEFAULT, LEAKAGE_LIMIT};
pub use intrinsic::{intrinsic_decoherence, IntrinsicSolution, PhaseDistribution, PhaseKick, SpectrumModel};
pub use qubit::{qubit_closed_solution, qubit_generator, qubit_kraus, GCoefficients, QubitModel, QubitSolution};
pub use wigner::{fourier_mode_rate, wigner_ctrw, InitialPhaseSpace, JumpLaw, RadialHistogram, WignerResult, WignerWalkConfig};

use crate::engine::EngineError;
use crate::kernels::KernelError;
use crate::quantum::QuantumError;
use crate::solvers::SolverError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("bad model parameters: {0}")]
    BadParameters(String),
    #[error("inconsistent jump moments: {0}")]
    BadMoments(String),
    #[error("kernel not supported here: {0}")]
    UnsupportedKernel(String),
    #[error("dangerous kernel refused: {0}")]
    DangerousKernel(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

fn probability(name: &str, p: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ModelError::BadParameters(format!("{name} must be a probability, got {p}")))
    }
}
