use super::EngineError;
use crate::grid::TimeGrid;
use crate::kernels::{sample_waiting, WaitingTimeDistribution};
use crate::linalg::{pauli_x, pauli_y, pauli_z, CMat};
use crate::quantum::{linear_entropy, DensityMatrix, KrausMap, QuantumError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The operation applied at each renewal event.
pub trait Scattering: Sync {
    fn dim(&self) -> usize;
    fn scatter(&self, rho: &CMat, rng: &mut ChaCha8Rng) -> CMat;
}

impl Scattering for KrausMap {
    fn dim(&self) -> usize {
        KrausMap::dim(self)
    }

    fn scatter(&self, rho: &CMat, _rng: &mut ChaCha8Rng) -> CMat {
        self.apply_unchecked(rho)
    }
}

/// Real-valued function of the state recorded along a realization.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    Expectation { name: String, operator: CMat },
    LinearEntropy,
}

impl Observable {
    pub fn expectation(name: impl Into<String>, operator: CMat) -> Self {
        Self::Expectation { name: name.into(), operator }
    }

    /// `M_x, M_y, M_z` for a qubit.
    pub fn bloch() -> Vec<Self> {
        vec![
            Self::expectation("Mx", pauli_x()),
            Self::expectation("My", pauli_y()),
            Self::expectation("Mz", pauli_z()),
        ]
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Expectation { name, .. } => name,
            Self::LinearEntropy => "linear_entropy",
        }
    }

    pub fn eval(&self, rho: &CMat) -> f64 {
        match self {
            Self::Expectation { operator, .. } => {
                // Tr[Oρ] = Σ_ij O_ji ρ_ij
                let d = rho.nrows();
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        s += (operator[(j, i)] * rho[(i, j)]).re;
                    }
                }
                s
            }
            Self::LinearEntropy => linear_entropy(rho),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RealizationOptions {
    pub observables: Vec<Observable>,
    pub store_states: bool,
}

/// One realization sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub event_times: Vec<f64>,
    pub grid: Vec<f64>,
    /// Number of events up to and including each grid time.
    pub event_counts: Vec<u32>,
    pub states: Option<Vec<CMat>>,
    /// `(name, values)` per observable.
    pub observables: Vec<(String, Vec<f64>)>,
}

impl Trajectory {
    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

/// Draws renewal events up to the end of the grid and samples the
/// piecewise-constant state on the grid. Fully determined by `seed`.
pub fn run_realization<S: Scattering + ?Sized>(
    rho0: &DensityMatrix,
    e: &S,
    w: &WaitingTimeDistribution,
    grid: &TimeGrid,
    seed: u64,
    options: &RealizationOptions,
) -> Result<Trajectory, EngineError> {
    if e.dim() != rho0.dim() {
        return Err(QuantumError::DimMismatch { expected: e.dim(), found: rho0.dim() }.into());
    }
    w.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = rho0.matrix().clone();
    let mut next = sample_waiting(w, &mut rng);
    let mut event_times = Vec::new();
    let n = grid.len();
    let mut event_counts = Vec::with_capacity(n);
    let mut states = options.store_states.then(|| Vec::with_capacity(n));
    let mut values: Vec<Vec<f64>> = options.observables.iter().map(|_| Vec::with_capacity(n)).collect();
    for &t in grid.points() {
        while next <= t {
            state = e.scatter(&state, &mut rng);
            event_times.push(next);
            next += sample_waiting(w, &mut rng);
        }
        event_counts.push(event_times.len() as u32);
        for (obs, v) in options.observables.iter().zip(values.iter_mut()) {
            v.push(obs.eval(&state));
        }
        if let Some(s) = states.as_mut() {
            s.push(state.clone());
        }
    }
    Ok(Trajectory {
        seed,
        event_times,
        grid: grid.points().to_vec(),
        event_counts,
        states,
        observables: options.observables.iter().map(|o| o.name().to_string()).zip(values).collect(),
    })
}
