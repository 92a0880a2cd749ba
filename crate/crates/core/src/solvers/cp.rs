use super::{closed_form_solve, subordination_solve, telegraph_ode_solve, volterra_solve, SolverError};
use crate::engine::renewal_probabilities;
use crate::grid::TimeGrid;
use crate::kernels::{waiting_from_kernel, MemoryKernel};
use crate::linalg::{matrix_unit, CMat};
use crate::quantum::{choi_from_images, damping_basis, lindblad_from_kraus, GeneratorMatrix, KrausMap};
use crate::states::StateTrajectory;
use rayon::prelude::*;

/// Deterministic solution route for the averaged dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionRoute {
    ClosedForm,
    Volterra,
    Subordination,
    /// Exponential kernel only.
    TelegraphOde,
    /// Renewal series `Σ P_n(t) Eⁿ`; needs a waiting-time density.
    Series,
}

/// Solves for `x` (any operator) along `route`, with `L = E − I`.
pub fn propagate(
    route: SolutionRoute,
    e: &KrausMap,
    kernel: &MemoryKernel,
    x: &CMat,
    grid: &TimeGrid,
) -> Result<StateTrajectory, SolverError> {
    let l = lindblad_from_kraus(e)?;
    propagate_with(route, e, &l, kernel, x, grid)
}

fn propagate_with(
    route: SolutionRoute,
    e: &KrausMap,
    l: &GeneratorMatrix,
    kernel: &MemoryKernel,
    x: &CMat,
    grid: &TimeGrid,
) -> Result<StateTrajectory, SolverError> {
    match route {
        SolutionRoute::ClosedForm => closed_form_solve(&damping_basis(l, None)?, kernel, x, grid),
        SolutionRoute::Subordination => subordination_solve(kernel, &damping_basis(l, None)?, x, grid),
        SolutionRoute::Volterra => volterra_solve(l, kernel, x, grid),
        SolutionRoute::TelegraphOde => match *kernel {
            MemoryKernel::Exponential { a_eps, gamma } => telegraph_ode_solve(l, gamma, a_eps, x, grid),
            _ => Err(SolverError::UnsupportedKernel(format!("telegraph route needs an exponential kernel, got {}", kernel.name()))),
        },
        SolutionRoute::Series => {
            let w = waiting_from_kernel(kernel)?;
            let probs = renewal_probabilities(&w, None, grid)?;
            Ok(StateTrajectory { grid: grid.points().to_vec(), states: probs.propagate(e, x) })
        }
    }
}

/// Minimum Choi eigenvalue of the map `ρ(0) → ρ(t)` at each grid point,
/// built by propagating every matrix unit `|i⟩⟨j|` along `route`.
pub fn cp_defect_over_time(
    route: SolutionRoute,
    e: &KrausMap,
    kernel: &MemoryKernel,
    grid: &TimeGrid,
) -> Result<Vec<f64>, SolverError> {
    let d = e.dim();
    let l = lindblad_from_kraus(e)?;
    let units: Vec<(usize, usize)> = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).collect();
    let images = units
        .par_iter()
        .map(|&(i, j)| propagate_with(route, e, &l, kernel, &matrix_unit(d, i, j), grid))
        .collect::<Result<Vec<_>, _>>()?;
    (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let at_t: Vec<CMat> = images.iter().map(|s| s.states[k].clone()).collect();
            Ok(choi_from_images(d, &at_t)?.cp_defect)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, pauli_y, pauli_z};
    use num_complex::Complex64;

    fn depolarizing() -> KrausMap {
        let s = Complex64::new(0.5f64.sqrt(), 0.0);
        KrausMap::new(vec![pauli_x() * s, pauli_y() * s]).unwrap()
    }

    #[test]
    fn safe_and_dangerous_telegraph() {
        let grid = TimeGrid::uniform(20.0, 201).unwrap();
        let safe = MemoryKernel::exponential(0.75, 2.0).unwrap();
        let d = cp_defect_over_time(SolutionRoute::ClosedForm, &depolarizing(), &safe, &grid).unwrap();
        assert!(d.iter().all(|&x| x >= -1e-9));
        // Weakly damped dangerous kernel: g_I = ½[(1+h_pop)/2 + h_coh] < 0 near t = π.
        let bad = MemoryKernel::exponential(1.0, 0.1).unwrap();
        let d = cp_defect_over_time(SolutionRoute::ClosedForm, &depolarizing(), &bad, &grid).unwrap();
        assert!(d.iter().cloned().fold(f64::INFINITY, f64::min) < -0.1);
    }

    #[test]
    fn dephasing_always_cp() {
        let deph = KrausMap::new(vec![pauli_z()]).unwrap();
        let grid = TimeGrid::uniform(20.0, 101).unwrap();
        let bad = MemoryKernel::exponential(0.25, 0.5).unwrap();
        let d = cp_defect_over_time(SolutionRoute::ClosedForm, &deph, &bad, &grid).unwrap();
        assert!(d.iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn routes_agree_on_matrix_units() {
        let grid = TimeGrid::uniform(5.0, 51).unwrap();
        let k = MemoryKernel::exponential(0.75, 2.0).unwrap();
        let e = depolarizing();
        let x = matrix_unit(2, 0, 1);
        let a = propagate(SolutionRoute::ClosedForm, &e, &k, &x, &grid).unwrap();
        let b = propagate(SolutionRoute::TelegraphOde, &e, &k, &x, &grid).unwrap();
        let c = propagate(SolutionRoute::Series, &e, &k, &x, &grid).unwrap();
        assert!(a.max_deviation(&b) < 1e-12);
        assert!(a.max_deviation(&c) < 1e-6, "{}", a.max_deviation(&c));
    }
}
