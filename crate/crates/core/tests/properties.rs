use ctqrw::engine::split_seed;
use ctqrw::kernels::MemoryKernel;
use ctqrw::linalg::{max_abs_diff, trace, CMat};
use ctqrw::models::{fourier_mode_rate, qubit_closed_solution, qubit_kraus, second_order_generator, JumpLaw, QubitModel};
use ctqrw::quantum::{DensityMatrix, KrausMap};
use ctqrw::solvers::relaxation;
use ctqrw::TimeGrid;
use num_complex::Complex64;
use proptest::prelude::*;

fn closure_defect(e: &KrausMap) -> f64 {
    let d = e.dim();
    let sum: CMat = e.operators().iter().map(|c| c.adjoint() * c).fold(CMat::zeros(d, d), |a, b| a + b);
    max_abs_diff(&sum, &CMat::identity(d, d))
}

fn safe_kernel() -> impl Strategy<Value = MemoryKernel> {
    prop_oneof![
        (0.1f64..5.0).prop_map(|a| MemoryKernel::markovian(a).unwrap()),
        (0.1f64..3.0, 0.1f64..0.99).prop_map(|(a, al)| MemoryKernel::fractional(a, al).unwrap()),
        // γ² ≥ 4A_ε.
        (0.1f64..4.0, 0.0f64..1.0).prop_map(|(g, f)| MemoryKernel::exponential(0.25 * g * g * f.max(1e-3), g).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qubit_maps_close(p in 0.0f64..1.0, kappa in 1e-3f64..1.0) {
        for m in [
            QubitModel::Depolarizing { p_x: p, p_y: 1.0 - p },
            QubitModel::Thermal { kappa, p_up: p, p_down: 1.0 - p },
        ] {
            prop_assert!(closure_defect(&qubit_kraus(&m).unwrap()) < 1e-14);
        }
        let kt = QubitModel::Thermal { kappa, p_up: p, p_down: 1.0 - p }.kappa_tilde().unwrap();
        prop_assert!((-1e-15..=0.25).contains(&kt));
    }

    #[test]
    fn g_coefficients_sum_to_one(k in safe_kernel(), z in -1.0f64..1.0) {
        let grid = TimeGrid::uniform(10.0 * k.time_scale(), 25).unwrap();
        let rho0 = DensityMatrix::from_bloch([0.0, (1.0 - z * z).sqrt(), z]).unwrap();
        let g = qubit_closed_solution(&QubitModel::depolarizing(), &k, &rho0, &grid).unwrap().g.unwrap();
        for i in 0..grid.len() {
            prop_assert!((g.g_i[i] + g.g_x[i] + g.g_y[i] + g.g_z[i] - 1.0).abs() < 1e-10);
            prop_assert!(g.g_i[i] >= -1e-9 && g.g_z[i] >= -1e-9 && g.g_x[i] >= -1e-12);
        }
    }

    #[test]
    fn safe_relaxation_is_a_contraction(k in safe_kernel(), lam in 0.0f64..4.0, s in 0.0f64..10.0) {
        let h = relaxation(&k, Complex64::new(lam, 0.0), s * k.time_scale()).unwrap();
        prop_assert!(h.re <= 1.0 + 1e-12 && h.re >= -1.0 - 1e-12, "{h}");
    }

    #[test]
    fn second_order_generator_preserves_trace(
        mr in -0.3f64..0.3, mi in -0.3f64..0.3, extra in 0.0f64..0.5, qr in -1.0f64..1.0, qi in -1.0f64..1.0
    ) {
        let mean = Complex64::new(mr, mi);
        let abs2 = mean.norm_sqr() + extra;
        let q = Complex64::new(qr, qi) * (abs2 / 2f64.sqrt());
        let l = second_order_generator(mean, q, abs2, 6).unwrap();
        let x = CMat::from_fn(6, 6, |i, j| Complex64::new((i * 7 + j) as f64 % 5.0, i as f64 - j as f64));
        prop_assert!(trace(&l.apply(&x).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn mode_rates_have_non_negative_real_part(kr in -5.0f64..5.0, ki in -5.0f64..5.0, mu in 0.1f64..2.0, s in 0.01f64..2.0) {
        let k = Complex64::new(kr, ki);
        for law in [JumpLaw::Levy { mu, sigma: s }, JumpLaw::isotropic(s), JumpLaw::PointMass { beta: Complex64::new(s, -s) }] {
            prop_assert!(fourier_mode_rate(&law, k).re >= -1e-15);
        }
    }

    #[test]
    fn seeds_do_not_collide_locally(base in any::<u64>(), i in 0u64..1_000_000) {
        prop_assert_ne!(split_seed(base, i), split_seed(base, i + 1));
    }
}
