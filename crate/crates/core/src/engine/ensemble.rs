use super::{run_realization, split_seed, EngineError, Observable, RealizationOptions, Scattering, Trajectory};
use crate::grid::TimeGrid;
use crate::kernels::WaitingTimeDistribution;
use crate::linalg::{re, CMat};
use crate::quantum::DensityMatrix;
use rayon::prelude::*;

/// Realizations per reduction chunk. Fixed so that results do not depend
/// on the number of threads.
const CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableStats {
    pub name: String,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n_realizations: usize,
    pub grid: Vec<f64>,
    pub mean_state: Vec<CMat>,
    pub observables: Vec<ObservableStats>,
    pub mean_events: Vec<f64>,
    pub events_stderr: Vec<f64>,
}

impl EnsembleStats {
    pub fn observable(&self, name: &str) -> Option<&ObservableStats> {
        self.observables.iter().find(|o| o.name == name)
    }

    /// Statistics of stored trajectories using the same chunked reduction
    /// as [`ensemble_average`]; trajectories must carry their states.
    pub fn from_trajectories(trajectories: &[Trajectory]) -> Result<Self, EngineError> {
        let first = trajectories.first().ok_or_else(|| EngineError::Invalid("no trajectories".into()))?;
        let dim = first
            .states
            .as_ref()
            .and_then(|s| s.first())
            .map(|m| m.nrows())
            .ok_or_else(|| EngineError::Invalid("trajectories were recorded without states".into()))?;
        let names: Vec<String> = first.observables.iter().map(|(n, _)| n.clone()).collect();
        let parts: Vec<EnsembleAccumulator> = trajectories
            .chunks(CHUNK)
            .map(|chunk| {
                let mut acc = EnsembleAccumulator::new(dim, first.grid.len(), names.len());
                for tr in chunk {
                    acc.push(tr);
                }
                acc
            })
            .collect();
        Ok(EnsembleAccumulator::tree_merge(parts).finish(first.grid.clone(), names))
    }
}

/// Welford accumulator over realizations; merged with Chan's formula.
#[derive(Debug, Clone)]
pub struct EnsembleAccumulator {
    n: u64,
    obs_mean: Vec<Vec<f64>>,
    obs_m2: Vec<Vec<f64>>,
    state_mean: Vec<CMat>,
    count_mean: Vec<f64>,
    count_m2: Vec<f64>,
}

impl EnsembleAccumulator {
    pub fn new(dim: usize, n_points: usize, n_observables: usize) -> Self {
        Self {
            n: 0,
            obs_mean: vec![vec![0.0; n_points]; n_observables],
            obs_m2: vec![vec![0.0; n_points]; n_observables],
            state_mean: vec![CMat::zeros(dim, dim); n_points],
            count_mean: vec![0.0; n_points],
            count_m2: vec![0.0; n_points],
        }
    }

    pub fn push(&mut self, tr: &Trajectory) {
        self.n += 1;
        let n = self.n as f64;
        for (k, (_, values)) in tr.observables.iter().enumerate() {
            welford(&mut self.obs_mean[k], &mut self.obs_m2[k], values.iter().copied(), n);
        }
        welford(&mut self.count_mean, &mut self.count_m2, tr.event_counts.iter().map(|&c| c as f64), n);
        if let Some(states) = &tr.states {
            let f = re(1.0 / n);
            for (m, s) in self.state_mean.iter_mut().zip(states) {
                *m += (s - &*m) * f;
            }
        }
    }

    pub fn merge(a: &Self, b: &Self) -> Self {
        if a.n == 0 {
            return b.clone();
        }
        if b.n == 0 {
            return a.clone();
        }
        let (na, nb) = (a.n as f64, b.n as f64);
        let n = na + nb;
        let chan = |ma: &[f64], qa: &[f64], mb: &[f64], qb: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let mut mean = Vec::with_capacity(ma.len());
            let mut m2 = Vec::with_capacity(ma.len());
            for i in 0..ma.len() {
                let delta = mb[i] - ma[i];
                mean.push(ma[i] + delta * nb / n);
                m2.push(qa[i] + qb[i] + delta * delta * na * nb / n);
            }
            (mean, m2)
        };
        let mut obs_mean = Vec::with_capacity(a.obs_mean.len());
        let mut obs_m2 = Vec::with_capacity(a.obs_mean.len());
        for k in 0..a.obs_mean.len() {
            let (m, q) = chan(&a.obs_mean[k], &a.obs_m2[k], &b.obs_mean[k], &b.obs_m2[k]);
            obs_mean.push(m);
            obs_m2.push(q);
        }
        let (count_mean, count_m2) = chan(&a.count_mean, &a.count_m2, &b.count_mean, &b.count_m2);
        let f = re(nb / n);
        let state_mean = a.state_mean.iter().zip(&b.state_mean).map(|(x, y)| x + (y - x) * f).collect();
        Self { n: a.n + b.n, obs_mean, obs_m2, state_mean, count_mean, count_m2 }
    }

    /// Pairwise merge in index order.
    pub fn tree_merge(mut parts: Vec<Self>) -> Self {
        assert!(!parts.is_empty(), "nothing to merge");
        while parts.len() > 1 {
            parts = parts
                .chunks(2)
                .map(|p| if p.len() == 2 { Self::merge(&p[0], &p[1]) } else { p[0].clone() })
                .collect();
        }
        parts.pop().expect("one part left")
    }

    pub fn finish(self, grid: Vec<f64>, names: Vec<String>) -> EnsembleStats {
        let n = self.n as f64;
        let se = |m2: &[f64]| -> Vec<f64> {
            m2.iter()
                .map(|q| if self.n > 1 { (q.max(0.0) / (n - 1.0) / n).sqrt() } else { 0.0 })
                .collect()
        };
        let observables = names
            .into_iter()
            .zip(self.obs_mean.iter().zip(&self.obs_m2))
            .map(|(name, (mean, m2))| ObservableStats { name, mean: mean.clone(), stderr: se(m2) })
            .collect();
        EnsembleStats {
            n_realizations: self.n as usize,
            grid,
            mean_state: self.state_mean.clone(),
            observables,
            mean_events: self.count_mean.clone(),
            events_stderr: se(&self.count_m2),
        }
    }
}

fn welford<I: Iterator<Item = f64>>(mean: &mut [f64], m2: &mut [f64], values: I, n: f64) {
    for ((m, q), x) in mean.iter_mut().zip(m2.iter_mut()).zip(values) {
        let delta = x - *m;
        *m += delta / n;
        *q += delta * (x - *m);
    }
}

#[derive(Debug, Clone, Default)]
pub struct EnsembleOptions {
    pub observables: Vec<Observable>,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

/// Mean state and observable statistics over `n_realizations`
/// realizations; realization `k` uses `split_seed(base_seed, k)`.
pub fn ensemble_average<S: Scattering + ?Sized>(
    rho0: &DensityMatrix,
    e: &S,
    w: &WaitingTimeDistribution,
    grid: &TimeGrid,
    n_realizations: usize,
    base_seed: u64,
    options: &EnsembleOptions,
) -> Result<EnsembleStats, EngineError> {
    if n_realizations == 0 {
        return Err(EngineError::Invalid("n_realizations must be at least 1".into()));
    }
    let ropts = RealizationOptions { observables: options.observables.clone(), store_states: true };
    let n_chunks = n_realizations.div_ceil(CHUNK);
    let dim = rho0.dim();
    let run = || -> Result<Vec<EnsembleAccumulator>, EngineError> {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = EnsembleAccumulator::new(dim, grid.len(), ropts.observables.len());
                for k in c * CHUNK..((c + 1) * CHUNK).min(n_realizations) {
                    let tr = run_realization(rho0, e, w, grid, split_seed(base_seed, k as u64), &ropts)?;
                    acc.push(&tr);
                }
                Ok(acc)
            })
            .collect()
    };
    let parts = match options.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|err| EngineError::ThreadPool(err.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let names = ropts.observables.iter().map(|o| o.name().to_string()).collect();
    Ok(EnsembleAccumulator::tree_merge(parts).finish(grid.points().to_vec(), names))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, pauli_x, pauli_y};
    use crate::quantum::KrausMap;

    fn depolarizing() -> KrausMap {
        let s = re(0.5f64.sqrt());
        KrausMap::new(vec![pauli_x() * s, pauli_y() * s]).unwrap()
    }

    #[test]
    fn identity_channel_gives_exact_mean() {
        let rho0 = DensityMatrix::from_bloch([0.3, 0.2, -0.5]).unwrap();
        let w = WaitingTimeDistribution::Exponential { rate: 1.0 };
        let grid = TimeGrid::uniform(5.0, 20).unwrap();
        let opts = EnsembleOptions { observables: Observable::bloch(), threads: Some(2) };
        let st = ensemble_average(&rho0, &KrausMap::identity(2), &w, &grid, 300, 9, &opts).unwrap();
        for m in &st.mean_state {
            assert!(max_abs_diff(m, rho0.matrix()) < 1e-15);
        }
        for o in &st.observables {
            assert!(o.stderr.iter().all(|&s| s == 0.0));
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let rho0 = DensityMatrix::from_bloch([1.0, 0.0, 0.0]).unwrap();
        let w = WaitingTimeDistribution::MittagLeffler { amplitude: 0.7, alpha: 0.5 };
        let grid = TimeGrid::uniform(10.0, 30).unwrap();
        let mk = |threads| EnsembleOptions { observables: Observable::bloch(), threads: Some(threads) };
        let a = ensemble_average(&rho0, &depolarizing(), &w, &grid, 500, 5, &mk(1)).unwrap();
        let b = ensemble_average(&rho0, &depolarizing(), &w, &grid, 500, 5, &mk(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn matches_reduction_of_individual_trajectories() {
        let rho0 = DensityMatrix::from_bloch([0.0, 0.6, 0.8]).unwrap();
        let w = WaitingTimeDistribution::Hypoexponential { r1: 0.5, r2: 1.5 };
        let grid = TimeGrid::uniform(8.0, 25).unwrap();
        let opts = EnsembleOptions { observables: Observable::bloch(), threads: None };
        let n = 200;
        let st = ensemble_average(&rho0, &depolarizing(), &w, &grid, n, 11, &opts).unwrap();
        let ropts = RealizationOptions { observables: Observable::bloch(), store_states: true };
        let trs: Vec<Trajectory> = (0..n)
            .map(|k| run_realization(&rho0, &depolarizing(), &w, &grid, split_seed(11, k as u64), &ropts).unwrap())
            .collect();
        assert_eq!(EnsembleStats::from_trajectories(&trs).unwrap(), st);
        // Plain averages agree to rounding.
        for (k, m) in st.observable("Mz").unwrap().mean.iter().enumerate() {
            let direct: f64 = trs.iter().map(|t| t.observable("Mz").unwrap()[k]).sum::<f64>() / n as f64;
            assert!((m - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_realizations_rejected() {
        let rho0 = DensityMatrix::maximally_mixed(2);
        let w = WaitingTimeDistribution::Exponential { rate: 1.0 };
        let grid = TimeGrid::uniform(1.0, 3).unwrap();
        let r = ensemble_average(&rho0, &depolarizing(), &w, &grid, 0, 1, &EnsembleOptions::default());
        assert!(matches!(r, Err(EngineError::Invalid(_))));
    }
}
