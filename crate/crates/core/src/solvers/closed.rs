use super::{DecayFunction, SolverError};
use crate::grid::TimeGrid;
use crate::kernels::MemoryKernel;
use crate::linalg::CMat;
use crate::quantum::{DampingBasis, QuantumError};
use crate::states::StateTrajectory;

/// `ρ(t) = Σ_λ č_λ h_λ(t) P_λ` with the kernel's closed-form `h_λ`.
///
/// `rho0` may be any operator (the map is linear); Markovian, exponential
/// and fractional kernels only.
pub fn closed_form_solve(
    basis: &DampingBasis,
    kernel: &MemoryKernel,
    rho0: &CMat,
    grid: &TimeGrid,
) -> Result<StateTrajectory, SolverError> {
    if rho0.nrows() != basis.dim || rho0.ncols() != basis.dim {
        return Err(QuantumError::DimMismatch { expected: basis.dim, found: rho0.nrows() }.into());
    }
    let coefficients = basis.coefficients_for(rho0);
    let decays = basis
        .modes
        .iter()
        .map(|m| DecayFunction::for_kernel(kernel, m.decay))
        .collect::<Result<Vec<_>, _>>()?;
    let mut states = Vec::with_capacity(grid.len());
    for &t in grid.points() {
        let mut out = CMat::zeros(basis.dim, basis.dim);
        for ((m, c), f) in basis.modes.iter().zip(&coefficients).zip(&decays) {
            if c.norm() > 0.0 {
                out += &m.right * (c * f.eval(t)?);
            }
        }
        states.push(out);
    }
    Ok(StateTrajectory { grid: grid.points().to_vec(), states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::mittag_leffler;
    use crate::linalg::{pauli_x, pauli_y};
    use crate::quantum::{damping_basis, lindblad_from_kraus, DensityMatrix, KrausMap};
    use num_complex::Complex64;

    fn depolarizing() -> KrausMap {
        let s = 0.5f64.sqrt();
        KrausMap::new(vec![pauli_x() * Complex64::new(s, 0.0), pauli_y() * Complex64::new(s, 0.0)]).unwrap()
    }

    #[test]
    fn fractional_depolarizing_matches_mittag_leffler() {
        let l = lindblad_from_kraus(&depolarizing()).unwrap();
        let basis = damping_basis(&l, None).unwrap();
        let a = 0.5f64.sqrt();
        let k = MemoryKernel::fractional(a, 0.5).unwrap();
        let rho0 = DensityMatrix::from_bloch([0.6, 0.0, 0.8]).unwrap();
        let grid = TimeGrid::uniform(20.0, 41).unwrap();
        let sol = closed_form_solve(&basis, &k, rho0.matrix(), &grid).unwrap();
        for (t, s) in grid.points().iter().zip(&sol.states) {
            let pop = 0.5 + 0.4 * mittag_leffler(0.5, 2.0 * a * t.sqrt()).unwrap();
            let coh = 0.3 * mittag_leffler(0.5, a * t.sqrt()).unwrap();
            assert!((s[(0, 0)].re - pop).abs() < 1e-13);
            assert!((s[(0, 1)].re - coh).abs() < 1e-13);
        }
    }

    #[test]
    fn stationary_state_is_constant() {
        let l = lindblad_from_kraus(&depolarizing()).unwrap();
        let basis = damping_basis(&l, None).unwrap();
        let eq = basis.stationary_state().unwrap();
        let grid = TimeGrid::uniform(10.0, 11).unwrap();
        for k in [MemoryKernel::markovian(1.0).unwrap(), MemoryKernel::exponential(0.25, 0.5).unwrap()] {
            let sol = closed_form_solve(&basis, &k, &eq, &grid).unwrap();
            assert!(sol.max_deviation_from(&eq) < 1e-14);
        }
    }

    #[test]
    fn custom_kernel_unsupported() {
        let l = lindblad_from_kraus(&depolarizing()).unwrap();
        let basis = damping_basis(&l, None).unwrap();
        let k = MemoryKernel::custom("k", 1.0, |u| u.sqrt()).unwrap();
        let grid = TimeGrid::uniform(1.0, 3).unwrap();
        let r = closed_form_solve(&basis, &k, &CMat::identity(2, 2), &grid);
        assert!(matches!(r, Err(SolverError::UnsupportedKernel(_))));
    }
}
