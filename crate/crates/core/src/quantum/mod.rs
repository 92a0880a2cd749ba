//! States, channels, generators and their spectral / positivity analysis.

mod choi;
mod damping;
mod density;
mod kraus;
mod superop;

pub use choi::{choi_from_images, choi_of_superoperator, ChoiMatrix, ChoiReport, CP_TOL};
pub use damping::{damping_basis, DampingBasis, DampingMode};
pub use density::{bloch_vector, linear_entropy, make_density, DensityMatrix};
pub use kraus::{apply_kraus, KrausMap};
pub use superop::{
    exp_generator_to_kraus, lindblad_from_kraus, mixture_generator, GeneratorMatrix, Superoperator,
};

use thiserror::Error;

pub const TOL_HERM: f64 = 1e-12;
pub const TOL_TRACE: f64 = 1e-12;
pub const TOL_EIG: f64 = 1e-12;
pub const TOL_CLOSURE: f64 = 1e-10;
pub const TOL_TRACE_PRESERVING: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |rho - rho^dagger| = {0:e}")]
    NonHermitian(f64),
    #[error("trace is {0} instead of 1")]
    NonUnitTrace(f64),
    #[error("negative eigenvalue {0:e}")]
    NegativeEigenvalue(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("Kraus closure violated: max |sum C^dagger C - I| = {0:e}")]
    ClosureDefect(f64),
    #[error("mixture weights must be non-negative and sum to 1: {0}")]
    BadWeights(String),
    #[error("map is not completely positive: Choi eigenvalue {0:e}")]
    NotCP(f64),
    #[error("generator is not diagonalizable (eigenvector condition number {0:e})")]
    Defective(f64),
    #[error("generator is not trace preserving (defect {0:e})")]
    NotTracePreserving(f64),
    #[error("operator list is empty")]
    Empty,
    #[error("non-finite matrix entries")]
    NonFinite,
}
