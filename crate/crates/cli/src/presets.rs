//! Fully specified configurations for the four reference figures.

use crate::config::{
    ExperimentConfig, ExperimentKind, GridSpec, InitialSpec, KernelSpec, ModelSpec, OutputSpec, RunSpec,
};

fn base(experiment: ExperimentKind, model: ModelSpec, kernels: Vec<KernelSpec>) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        model: Some(model),
        kernel: kernels.first().cloned(),
        kernels: if kernels.len() > 1 { kernels } else { Vec::new() },
        grid: Some(GridSpec::standard()),
        initial: Some(InitialSpec::plus_x()),
        run: RunSpec::default(),
        wigner: None,
        intrinsic: None,
        output: OutputSpec::default(),
    }
}

fn depolarizing() -> ModelSpec {
    ModelSpec::Depolarizing { p_x: 0.5, p_y: 0.5 }
}

fn half_fractional() -> KernelSpec {
    KernelSpec::Fractional { a_alpha: 0.5f64.sqrt(), alpha: 0.5 }
}

/// Preset `n` in 1..=4; grids cover `t/T ∈ [0, 10]` with 200 points.
///
/// 1. single depolarizing realization, fractional kernel `α = 1/2`, `A_α = 1/√2`
/// 2. 10⁴-realization ensemble of the same walk against `E_{1/2}(−A_α√t)`
/// 3. depolarizing linear entropy for four kernels
/// 4. thermal (`κ = 0.75`, `p_↓ = 1`) linear entropy for four kernels
///
/// Panics for any other `n`.
pub fn figure_preset(n: u8) -> ExperimentConfig {
    match n {
        1 => {
            let mut c = base(ExperimentKind::Figure1, depolarizing(), vec![half_fractional()]);
            let s = 1.0 / 3f64.sqrt();
            c.initial = Some(InitialSpec { bloch: [s, s, s] });
            c
        }
        2 => {
            let mut c = base(ExperimentKind::Figure2, depolarizing(), vec![half_fractional()]);
            c.run.realizations = 10_000;
            c
        }
        3 => base(
            ExperimentKind::Figure3,
            depolarizing(),
            vec![
                KernelSpec::Markovian { a1: 0.5 },
                half_fractional(),
                KernelSpec::Exponential { a_eps: 1.0, gamma: 2.0 },
                KernelSpec::Exponential { a_eps: 0.25, gamma: 0.5 },
            ],
        ),
        4 => base(
            ExperimentKind::Figure4,
            ModelSpec::Thermal { kappa: 0.75, p_up: 0.0, p_down: 1.0 },
            vec![
                KernelSpec::Markovian { a1: 1.0 },
                KernelSpec::Fractional { a_alpha: 1.0, alpha: 0.5 },
                KernelSpec::Exponential { a_eps: 4.0, gamma: 4.0 },
                KernelSpec::Exponential { a_eps: 1.0, gamma: 1.0 },
            ],
        ),
        _ => panic!("figure presets are numbered 1 to 4, got {n}"),
    }
}
