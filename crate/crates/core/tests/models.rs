use ctqrw::kernels::MemoryKernel;
use ctqrw::linalg::{re, trace, CMat};
use ctqrw::models::{
    number_operator, qubit_closed_solution, qubit_kraus, second_order_generator, top_population, wigner_ctrw,
    InitialPhaseSpace, JumpLaw, QubitModel, WignerWalkConfig, LEAKAGE_LIMIT,
};
use ctqrw::quantum::{linear_entropy, DensityMatrix};
use ctqrw::solvers::{cp_defect_over_time, volterra_solve, SolutionRoute};
use ctqrw::TimeGrid;
use num_complex::Complex64;

fn bloch_states() -> Vec<DensityMatrix> {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.6, -0.64, 0.48], [0.1, 0.2, -0.3]]
        .into_iter()
        .map(|b| DensityMatrix::from_bloch(b).unwrap())
        .collect()
}

fn det(m: &CMat) -> f64 {
    (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re
}

#[test]
fn depolarizing_states_stay_positive() {
    for (a_eps, gamma) in [(0.25, 0.5), (1.0, 0.1), (0.75, 2.0), (5.0, 0.3)] {
        let k = MemoryKernel::exponential(a_eps, gamma).unwrap();
        let grid = TimeGrid::uniform(10.0 * k.time_scale(), 400).unwrap();
        for rho0 in bloch_states() {
            let sol = qubit_closed_solution(&QubitModel::depolarizing(), &k, &rho0, &grid).unwrap();
            for s in &sol.trajectory.states {
                assert!(det(s) >= -1e-12, "gamma={gamma} A={a_eps}: det {}", det(s));
            }
        }
    }
}

#[test]
fn weakly_damped_thermal_loses_positivity() {
    let model = QubitModel::Thermal { kappa: 0.75, p_up: 0.0, p_down: 1.0 };
    let rho0 = DensityMatrix::from_bloch([1.0, 0.0, 0.0]).unwrap();
    for (a_eps, gamma) in [(1.0, 1.0), (1.0, 0.5), (2.0, 1.2)] {
        let k = MemoryKernel::exponential(a_eps, gamma).unwrap();
        let grid = TimeGrid::uniform(10.0 * k.time_scale(), 200).unwrap();
        let sol = qubit_closed_solution(&model, &k, &rho0, &grid).unwrap();
        let min = sol.trajectory.map(linear_entropy).into_iter().fold(f64::INFINITY, f64::min);
        assert!(min < 0.0, "gamma={gamma} A={a_eps}: min delta {min}");
    }
}

#[test]
fn dephasing_is_cp_for_any_kernel_parameters() {
    let e = qubit_kraus(&QubitModel::Dephasing).unwrap();
    for (a_eps, gamma) in [(0.25, 0.5), (1.0, 0.1), (10.0, 1.0)] {
        let k = MemoryKernel::exponential(a_eps, gamma).unwrap();
        let grid = TimeGrid::uniform(10.0 * k.time_scale(), 200).unwrap();
        let min = cp_defect_over_time(SolutionRoute::ClosedForm, &e, &k, &grid)
            .unwrap()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-9, "gamma={gamma} A={a_eps}: {min}");
    }
}

#[test]
fn dephasing_populations_constant() {
    let k = MemoryKernel::exponential(1.0, 0.5).unwrap();
    let grid = TimeGrid::uniform(20.0, 100).unwrap();
    let rho0 = DensityMatrix::from_bloch([0.6, 0.0, 0.8]).unwrap();
    let sol = qubit_closed_solution(&QubitModel::Dephasing, &k, &rho0, &grid).unwrap();
    let g = sol.g;
    assert!(g.is_none());
    for s in &sol.trajectory.states {
        assert!((s[(0, 0)].re - 0.9).abs() < 1e-15);
    }
}

#[test]
fn walkers_match_truncated_fock_generator() {
    let abs2 = 0.02;
    let kernel = MemoryKernel::fractional(1.0, 0.7).unwrap();
    let grid = TimeGrid::uniform(10.0, 41).unwrap();
    let dim = 10;
    let l = second_order_generator(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), abs2, dim).unwrap();
    let mut vac = CMat::zeros(dim, dim);
    vac[(0, 0)] = re(1.0);
    let sol = volterra_solve(&l, &kernel, &vac, &grid).unwrap();
    let n_op = number_operator(dim);
    let n_fock: Vec<f64> = sol.states.iter().map(|s| trace(&(&n_op * s)).re).collect();
    for s in &sol.states {
        assert!(top_population(s) < LEAKAGE_LIMIT);
    }

    let cfg = WignerWalkConfig {
        initial: InitialPhaseSpace::Coherent(Complex64::new(0.0, 0.0)),
        ..WignerWalkConfig::new(JumpLaw::isotropic(abs2), kernel, 20_000)
    };
    let walk = wigner_ctrw(&cfg, &grid, 5).unwrap();
    let est = walk.n_estimate.unwrap();
    let se = walk.n_estimate_stderr.unwrap();
    for i in 1..grid.len() {
        assert!((est[i] - n_fock[i]).abs() < 3.0 * se[i], "t={}: {} vs {} (se {})", grid.points()[i], est[i], n_fock[i], se[i]);
        assert!((walk.n_positions[i] - n_fock[i]).abs() < 3.0 * walk.n_positions_stderr[i]);
    }
}
