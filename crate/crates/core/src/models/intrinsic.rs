use super::ModelError;
use crate::engine::Scattering;
use crate::grid::TimeGrid;
use crate::kernels::MemoryKernel;
use crate::linalg::CMat;
use crate::quantum::DensityMatrix;
use crate::solvers::relaxation;
use crate::states::StateTrajectory;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

/// Law of the random evolution time `τ` applied at each event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseDistribution {
    Delta { tau_b: f64 },
    /// `P(τ) = e^{−τ/τ_b}/τ_b`.
    ExponentialP { tau_b: f64 },
    /// Rate preset `γ(ω) = ln(1 + iωτ_b)`. It corresponds to the
    /// non-normalizable weight `e^{−τ/τ_b}/τ`, so it has no sampler.
    FormalLog { tau_b: f64 },
}

impl PhaseDistribution {
    fn tau_b(&self) -> f64 {
        match *self {
            Self::Delta { tau_b } | Self::ExponentialP { tau_b } | Self::FormalLog { tau_b } => tau_b,
        }
    }

    /// `γ(ω) = 1 − P̂(ω)`, `P̂(ω) = ∫ P(τ) e^{−iωτ} dτ`.
    pub fn rate(&self, omega: f64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let x = Complex64::new(0.0, omega * self.tau_b());
        match self {
            Self::Delta { .. } => one - (-x).exp(),
            Self::ExponentialP { .. } => x / (one + x),
            Self::FormalLog { .. } => (one + x).ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumModel {
    /// `ε_n` of a Hamiltonian diagonal in the working basis.
    pub levels: Vec<f64>,
    pub phase: PhaseDistribution,
}

impl SpectrumModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.levels.is_empty() {
            return Err(ModelError::BadParameters("spectrum has no levels".into()));
        }
        if let Some(e) = self.levels.iter().find(|e| !e.is_finite()) {
            return Err(ModelError::BadParameters(format!("level {e} is not finite")));
        }
        let tau_b = self.phase.tau_b();
        if !(tau_b.is_finite() && tau_b > 0.0) {
            return Err(ModelError::BadParameters(format!("tau_b must be positive, got {tau_b}")));
        }
        Ok(())
    }

    /// Matrix of `γ_nm = 1 − P̂(ε_n − ε_m)`; the diagonal is exactly zero.
    pub fn rates(&self) -> CMat {
        let d = self.levels.len();
        CMat::from_fn(d, d, |n, m| {
            if n == m {
                Complex64::new(0.0, 0.0)
            } else {
                self.phase.rate(self.levels[n] - self.levels[m])
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct IntrinsicSolution {
    pub trajectory: StateTrajectory,
    pub rates: CMat,
}

/// Each element obeys `dρ_nm/dt = −γ_nm ∫₀ᵗ K(t−τ) ρ_nm(τ) dτ`; populations
/// are left untouched.
pub fn intrinsic_decoherence(
    spec: &SpectrumModel,
    kernel: &MemoryKernel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<IntrinsicSolution, ModelError> {
    spec.validate()?;
    let d = spec.levels.len();
    if rho0.dim() != d {
        return Err(ModelError::BadParameters(format!("state has dimension {}, spectrum has {d} levels", rho0.dim())));
    }
    let rates = spec.rates();
    let r0 = rho0.matrix();
    let mut states = vec![r0.clone(); grid.len()];
    for n in 0..d {
        for m in n + 1..d {
            let g = rates[(n, m)];
            if g == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (state, &t) in states.iter_mut().zip(grid.points()) {
                let h = relaxation(kernel, g, t)?;
                state[(n, m)] = r0[(n, m)] * h;
                // γ_mn = γ_nm*, so the relaxation of the conjugate element
                // is the conjugate.
                state[(m, n)] = state[(n, m)].conj();
            }
        }
    }
    Ok(IntrinsicSolution { trajectory: StateTrajectory { grid: grid.points().to_vec(), states }, rates })
}

/// Event map `ρ ↦ e^{−iHτ} ρ e^{iHτ}` with `τ` drawn from the phase
/// distribution.
#[derive(Debug, Clone)]
pub struct PhaseKick {
    spec: SpectrumModel,
}

impl PhaseKick {
    pub fn new(spec: SpectrumModel) -> Result<Self, ModelError> {
        spec.validate()?;
        if let PhaseDistribution::FormalLog { .. } = spec.phase {
            return Err(ModelError::BadParameters("the logarithmic rate preset has no normalizable law to sample".into()));
        }
        Ok(Self { spec })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.spec.phase {
            PhaseDistribution::Delta { tau_b } => tau_b,
            PhaseDistribution::ExponentialP { tau_b } => tau_b * rng.sample::<f64, _>(Exp1),
            PhaseDistribution::FormalLog { .. } => unreachable!("rejected in PhaseKick::new"),
        }
    }
}

impl Scattering for PhaseKick {
    fn dim(&self) -> usize {
        self.spec.levels.len()
    }

    fn scatter(&self, rho: &CMat, rng: &mut ChaCha8Rng) -> CMat {
        let tau = self.draw(rng);
        let e = &self.spec.levels;
        CMat::from_fn(rho.nrows(), rho.ncols(), |n, m| {
            rho[(n, m)] * Complex64::from_polar(1.0, -(e[n] - e[m]) * tau)
        })
    }
}
