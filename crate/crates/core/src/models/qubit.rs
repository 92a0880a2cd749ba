use super::{probability, ModelError};
use crate::grid::TimeGrid;
use crate::kernels::MemoryKernel;
use crate::linalg::{pauli_x, pauli_y, pauli_z, re, CMat};
use crate::quantum::{lindblad_from_kraus, DensityMatrix, GeneratorMatrix, KrausMap};
use crate::solvers::{DecayFunction, SolverError};
use crate::states::StateTrajectory;
use num_complex::Complex64;

/// Two-level reservoirs; the basis is `{|0⟩, |1⟩}` with `σ_z|0⟩ = |0⟩`
/// (upper level first).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QubitModel {
    Depolarizing { p_x: f64, p_y: f64 },
    Dephasing,
    /// Generalized amplitude damping with strength `κ ∈ (0, 1]`.
    Thermal { kappa: f64, p_up: f64, p_down: f64 },
}

impl QubitModel {
    pub fn depolarizing() -> Self {
        Self::Depolarizing { p_x: 0.5, p_y: 0.5 }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            Self::Depolarizing { p_x, p_y } => {
                probability("p_x", p_x)?;
                probability("p_y", p_y)?;
                sums_to_one(p_x, p_y)
            }
            Self::Dephasing => Ok(()),
            Self::Thermal { kappa, p_up, p_down } => {
                if !(kappa > 0.0 && kappa <= 1.0) {
                    return Err(ModelError::BadParameters(format!("kappa must lie in (0, 1], got {kappa}")));
                }
                probability("p_up", p_up)?;
                probability("p_down", p_down)?;
                sums_to_one(p_up, p_down)
            }
        }
    }

    /// `κ̃ = ½[1 − κ/2 − √(1−κ)]` for the thermal model.
    pub fn kappa_tilde(&self) -> Option<f64> {
        match *self {
            Self::Thermal { kappa, .. } => Some(0.5 * (1.0 - 0.5 * kappa - (1.0 - kappa).sqrt())),
            _ => None,
        }
    }

    /// Damping eigenvalues `(λ_pop, λ_coh)` of `L = E − I`.
    pub fn decay_rates(&self) -> (f64, f64) {
        match *self {
            Self::Depolarizing { .. } => (2.0, 1.0),
            Self::Dephasing => (0.0, 2.0),
            Self::Thermal { kappa, .. } => (kappa, 0.5 * kappa + 2.0 * self.kappa_tilde().expect("thermal")),
        }
    }

    /// Equilibrium upper-level population.
    pub fn equilibrium_upper(&self) -> f64 {
        match *self {
            Self::Thermal { p_up, .. } => p_up,
            _ => 0.5,
        }
    }

    /// A stationary state: `I/2`, or `diag(p_↑, p_↓)` for the thermal model.
    /// Dephasing leaves every diagonal state fixed; `I/2` is returned.
    pub fn stationary_state(&self) -> CMat {
        let p = self.equilibrium_upper();
        CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![re(p), re(1.0 - p)]))
    }
}

fn sums_to_one(a: f64, b: f64) -> Result<(), ModelError> {
    if (a + b - 1.0).abs() > 1e-12 {
        return Err(ModelError::BadParameters(format!("probabilities sum to {}", a + b)));
    }
    Ok(())
}

/// Kraus operators of the model's scattering map.
pub fn qubit_kraus(model: &QubitModel) -> Result<KrausMap, ModelError> {
    model.validate()?;
    let c = |x: f64| Complex64::new(x, 0.0);
    let ops = match *model {
        QubitModel::Depolarizing { p_x, p_y } => vec![pauli_x() * c(p_x.sqrt()), pauli_y() * c(p_y.sqrt())],
        QubitModel::Dephasing => vec![pauli_z()],
        QubitModel::Thermal { kappa, p_up, p_down } => {
            let s = (1.0 - kappa).sqrt();
            let k = kappa.sqrt();
            let m = |a: f64, b: f64, cc: f64, d: f64| CMat::from_row_slice(2, 2, &[c(a), c(b), c(cc), c(d)]);
            vec![
                m(1.0, 0.0, 0.0, s) * c(p_up.sqrt()),
                m(0.0, k, 0.0, 0.0) * c(p_up.sqrt()),
                m(s, 0.0, 0.0, 1.0) * c(p_down.sqrt()),
                m(0.0, 0.0, k, 0.0) * c(p_down.sqrt()),
            ]
        }
    };
    Ok(KrausMap::new(ops)?)
}

/// `L = E − I` for the model.
pub fn qubit_generator(model: &QubitModel) -> Result<GeneratorMatrix, ModelError> {
    Ok(lindblad_from_kraus(&qubit_kraus(model)?)?)
}

/// Depolarizing map in the sum representation
/// `ρ(t) = g_I ρ0 + Σ_j g_j σ_j ρ0 σ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GCoefficients {
    pub g_i: Vec<f64>,
    pub g_x: Vec<f64>,
    pub g_y: Vec<f64>,
    pub g_z: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct QubitSolution {
    pub trajectory: StateTrajectory,
    /// Depolarizing model only.
    pub g: Option<GCoefficients>,
}

/// Closed-form populations and coherences,
/// `P_+(t) = P_eq + (P_+(0) − P_eq) h(t, λ_pop)` and `C(t) = C(0) h(t, λ_coh)`.
///
/// The depolarizing closed form assumes `p_x = p_y = 1/2`; other weights
/// should go through the generic solvers.
pub fn qubit_closed_solution(
    model: &QubitModel,
    kernel: &MemoryKernel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<QubitSolution, ModelError> {
    model.validate()?;
    if let QubitModel::Depolarizing { p_x, .. } = *model {
        if (p_x - 0.5).abs() > 1e-12 {
            return Err(ModelError::BadParameters(
                "closed forms assume p_x = p_y = 1/2; use the generic solvers".into(),
            ));
        }
    }
    if rho0.dim() != 2 {
        return Err(ModelError::BadParameters(format!("qubit state expected, got dimension {}", rho0.dim())));
    }
    let decay = |lam: f64| -> Result<DecayFunction, ModelError> {
        DecayFunction::for_kernel(kernel, Complex64::new(lam, 0.0)).map_err(|e| match e {
            SolverError::UnsupportedKernel(m) => ModelError::UnsupportedKernel(m),
            other => other.into(),
        })
    };
    let (lam_pop, lam_coh) = model.decay_rates();
    let (h_pop, h_coh) = (decay(lam_pop)?, decay(lam_coh)?);
    let r = rho0.matrix();
    let p_eq = model.equilibrium_upper();
    let p0 = r[(0, 0)].re;
    let c0 = r[(0, 1)];
    let mut states = Vec::with_capacity(grid.len());
    let mut hs = Vec::with_capacity(grid.len());
    for &t in grid.points() {
        let hp = h_pop.eval(t)?.re;
        let hc = h_coh.eval(t)?.re;
        let p = p_eq + (p0 - p_eq) * hp;
        let c = c0 * hc;
        states.push(CMat::from_row_slice(2, 2, &[re(p), c, c.conj(), re(1.0 - p)]));
        hs.push((hp, hc));
    }
    let g = matches!(model, QubitModel::Depolarizing { .. }).then(|| GCoefficients {
        g_i: hs.iter().map(|(p, c)| 0.5 * (0.5 * (1.0 + p) + c)).collect(),
        g_x: hs.iter().map(|(p, _)| 0.25 * (1.0 - p)).collect(),
        g_y: hs.iter().map(|(p, _)| 0.25 * (1.0 - p)).collect(),
        g_z: hs.iter().map(|(p, c)| 0.5 * (0.5 * (1.0 + p) - c)).collect(),
    });
    Ok(QubitSolution { trajectory: StateTrajectory { grid: grid.points().to_vec(), states }, g })
}
