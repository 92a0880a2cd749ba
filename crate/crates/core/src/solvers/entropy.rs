use super::SolverError;
use crate::kernels::{kernel_integral, MemoryKernel};
use crate::linalg::CVec;
use crate::quantum::{KrausMap, QuantumError};

/// Leading short-time linear entropy `δ(t) ≈ 2 k₂(t) ⟨⟨E⟩⟩` from a pure
/// state, where `k₂(t) = ∫₀ᵗ K(t−τ) τ dτ`: `2A₁t`, `A_ε t²` or
/// `2A_α t^α/Γ(1+α)` times `⟨⟨E⟩⟩` to leading order.
#[derive(Debug, Clone)]
pub struct ShortTimeEntropy {
    /// `⟨⟨E⟩⟩ = Σ_i ⟨C_i†C_i⟩ − ⟨C_i†⟩⟨C_i⟩`.
    pub coefficient: f64,
    pub kernel: MemoryKernel,
}

impl ShortTimeEntropy {
    pub fn predict(&self, t: f64) -> Result<f64, SolverError> {
        Ok(2.0 * kernel_integral(&self.kernel, 2, t)? * self.coefficient)
    }

    /// Leading power `δ ∝ t^p`.
    pub fn exponent(&self) -> Option<f64> {
        match self.kernel {
            MemoryKernel::Markovian { .. } => Some(1.0),
            MemoryKernel::Exponential { .. } => Some(2.0),
            MemoryKernel::Fractional { alpha, .. } => Some(alpha),
            MemoryKernel::CustomLaplace(_) => None,
        }
    }
}

pub fn short_time_entropy(e: &KrausMap, psi: &CVec, kernel: &MemoryKernel) -> Result<ShortTimeEntropy, SolverError> {
    kernel.validate()?;
    if psi.len() != e.dim() {
        return Err(QuantumError::DimMismatch { expected: e.dim(), found: psi.len() }.into());
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(QuantumError::NonUnitTrace(norm * norm).into());
    }
    let mut coefficient = 0.0;
    for c in e.operators() {
        let cpsi = c * psi;
        let mean = psi.dotc(&cpsi);
        coefficient += cpsi.norm_squared() - mean.norm_sqr();
    }
    Ok(ShortTimeEntropy { coefficient, kernel: kernel.clone() })
}
