use super::EngineError;
use crate::grid::TimeGrid;
use crate::kernels::WaitingTimeDistribution;
use crate::linalg::{max_abs, re, CMat};
use crate::quantum::{DensityMatrix, KrausMap, QuantumError};
use crate::states::StateTrajectory;

/// Internal refinements of the output step; results are Richardson
/// extrapolated across them.
const LEVELS: [usize; 3] = [4, 8, 16];
const N_MAX_CAP: usize = 512;
/// Default truncation target for the renewal series.
pub const SERIES_TAIL_TOL: f64 = 1e-6;
const DRIFT_LIMIT: f64 = 1e-4;

/// `P_n(t)`: probability of exactly `n` events in `[0, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalProbabilities {
    pub grid: Vec<f64>,
    /// `probabilities[n][k] = P_n(t_k)`.
    pub probabilities: Vec<Vec<f64>>,
    /// `1 − Σ_n P_n(t_k)`.
    pub tail: Vec<f64>,
}

impl RenewalProbabilities {
    pub fn n_max(&self) -> usize {
        self.probabilities.len() - 1
    }

    /// `Σ_n P_n(t_k) Eⁿ[x]` at every grid point, for any operator `x`.
    pub fn propagate(&self, e: &KrausMap, x: &CMat) -> Vec<CMat> {
        let mut powers = vec![x.clone()];
        for _ in 0..self.n_max() {
            let next = e.apply_unchecked(powers.last().expect("seeded"));
            powers.push(next);
        }
        (0..self.grid.len())
            .map(|k| {
                let mut s = CMat::zeros(x.nrows(), x.ncols());
                for (p, op) in self.probabilities.iter().zip(&powers) {
                    s += op * re(p[k]);
                }
                s
            })
            .collect()
    }
}

/// One refinement level: survival at fine nodes and cell integrals.
struct Level {
    r: usize,
    /// `c[m]`, `m = 0..N−1`, multiplies `P_{n−1}(t_{k−m})`.
    c: Vec<f64>,
    /// `a[m]` multiplies `P_{n−1}(0)` at distance `m`.
    a: Vec<f64>,
    survival: Vec<f64>,
}

impl Level {
    /// Product-trapezoid weights: `P_{n−1}` is interpolated linearly on each
    /// cell and integrated exactly against `w`, using
    /// `∫ w(s)(s−s₀)/h ds = I/h − S(s₁)` and `∫ w(s)(s₁−s)/h ds = S(s₀) − I/h`.
    fn new(r: usize, h: f64, survival: Vec<f64>, cells: &[f64]) -> Self {
        let n = survival.len();
        let a: Vec<f64> = (0..n).map(|m| if m == 0 { 0.0 } else { cells[m - 1] / h - survival[m] }).collect();
        let b = |m: usize| survival[m - 1] - cells[m - 1] / h;
        let c = (0..n - 1).map(|m| if m == 0 { b(1) } else { a[m] + b(m + 1) }).collect();
        Self { r, c, a, survival }
    }

    fn next(&self, prev: &[f64]) -> Vec<f64> {
        let n = prev.len();
        let mut out = vec![0.0; n];
        for k in 1..n {
            let mut s = self.a[k] * prev[0];
            for m in 0..k {
                s += self.c[m] * prev[k - m];
            }
            out[k] = s;
        }
        out
    }
}

fn richardson_exponents(w: &WaitingTimeDistribution) -> [f64; 2] {
    match w {
        WaitingTimeDistribution::MittagLeffler { alpha, .. } if *alpha < 1.0 => [1.0 + alpha, 2.0],
        _ => [2.0, 4.0],
    }
}

fn extrapolate(t: [&[f64]; 3], p: [f64; 2]) -> Vec<f64> {
    let f1 = 2f64.powf(p[0]);
    let f2 = 2f64.powf(p[1]);
    (0..t[0].len())
        .map(|k| {
            let r01 = (f1 * t[1][k] - t[0][k]) / (f1 - 1.0);
            let r12 = (f1 * t[2][k] - t[1][k]) / (f1 - 1.0);
            (f2 * r12 - r01) / (f2 - 1.0)
        })
        .collect()
}

/// Disagreement between the two first-stage extrapolants; an estimate of
/// the error left before the final stage.
fn richardson_spread(t: &[Vec<f64>], p: f64) -> f64 {
    let f = 2f64.powf(p);
    (0..t[0].len())
        .map(|k| {
            let r01 = (f * t[1][k] - t[0][k]) / (f - 1.0);
            let r12 = (f * t[2][k] - t[1][k]) / (f - 1.0);
            (r12 - r01).abs()
        })
        .fold(0.0, f64::max)
}

/// Iterates `P_n(t) = ∫₀ᵗ w(t−τ) P_{n−1}(τ) dτ` by product-trapezoid
/// convolution on internally refined grids, Richardson extrapolated.
///
/// With `n_max = None` the series stops at the first `n` whose tail at
/// the grid end is below 1e-6 (at most 512 terms).
pub fn renewal_probabilities(
    w: &WaitingTimeDistribution,
    n_max: Option<usize>,
    grid: &TimeGrid,
) -> Result<RenewalProbabilities, EngineError> {
    w.validate()?;
    let h = grid.uniform_step().ok_or(EngineError::NonUniformGrid)?;
    let k_out = grid.len() - 1;
    let r_max = *LEVELS.last().expect("levels");
    let hf = h / r_max as f64;
    let n_fine = k_out * r_max + 1;
    let survival: Vec<f64> = (0..n_fine).map(|j| w.survival(j as f64 * hf)).collect();
    let cells: Vec<f64> =
        (1..n_fine).map(|m| w.survival_integral((m - 1) as f64 * hf, m as f64 * hf)).collect();
    let levels: Vec<Level> = LEVELS
        .iter()
        .map(|&r| {
            let step = r_max / r;
            let s: Vec<f64> = survival.iter().step_by(step).copied().collect();
            let c: Vec<f64> = cells.chunks(step).map(|ch| ch.iter().sum()).collect();
            Level::new(r, h / r as f64, s, &c)
        })
        .collect();
    let exps = richardson_exponents(w);

    let mut current: Vec<Vec<f64>> = levels.iter().map(|l| l.survival.clone()).collect();
    let sample = |lvl: &Level, v: &[f64]| -> Vec<f64> { v.iter().step_by(lvl.r).copied().collect() };
    let mut probabilities: Vec<Vec<f64>> = Vec::new();
    let mut total = vec![0.0; k_out + 1];
    let mut worst_drift = 0.0_f64;
    let cap = n_max.unwrap_or(N_MAX_CAP);
    for n in 0..=cap {
        if n > 0 {
            current = levels.iter().zip(&current).map(|(l, prev)| l.next(prev)).collect();
        }
        let outs: Vec<Vec<f64>> = levels.iter().zip(&current).map(|(l, v)| sample(l, v)).collect();
        let p = if n == 0 {
            outs[2].clone()
        } else {
            worst_drift = worst_drift.max(richardson_spread(&outs, exps[0]));
            extrapolate([&outs[0], &outs[1], &outs[2]], exps)
        };
        for (t, v) in total.iter_mut().zip(&p) {
            *t += v;
        }
        probabilities.push(p);
        if n_max.is_none() && 1.0 - total[k_out] < SERIES_TAIL_TOL {
            break;
        }
    }
    if worst_drift > DRIFT_LIMIT {
        return Err(EngineError::GridTooCoarse(format!(
            "refinement changed P_n by {worst_drift:.3e} (limit {DRIFT_LIMIT:e}); use a finer grid"
        )));
    }
    let excess = total.iter().map(|s| s - 1.0).fold(f64::NEG_INFINITY, f64::max);
    if excess > DRIFT_LIMIT {
        return Err(EngineError::GridTooCoarse(format!("probabilities sum to 1 + {excess:.3e}")));
    }
    if let Some(bad) = probabilities.iter().flatten().find(|p| !(**p >= -DRIFT_LIMIT && **p <= 1.0 + DRIFT_LIMIT)) {
        return Err(EngineError::GridTooCoarse(format!("probability {bad:e} outside [0, 1]")));
    }
    let tail = total.iter().map(|s| 1.0 - s).collect();
    Ok(RenewalProbabilities { grid: grid.points().to_vec(), probabilities, tail })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSolution {
    pub trajectory: StateTrajectory,
    /// `tail(t) × max_n ‖Eⁿ[ρ0]‖` (entrywise max norm).
    pub error_bound: Vec<f64>,
    pub n_max: usize,
}

/// `ρ(t) = Σ_{n ≤ n_max} P_n(t) Eⁿ[ρ0]`; fails if the truncation tail at the
/// grid end exceeds 1e-6.
pub fn series_solution(
    rho0: &DensityMatrix,
    e: &KrausMap,
    w: &WaitingTimeDistribution,
    grid: &TimeGrid,
    n_max: Option<usize>,
) -> Result<SeriesSolution, EngineError> {
    if e.dim() != rho0.dim() {
        return Err(QuantumError::DimMismatch { expected: e.dim(), found: rho0.dim() }.into());
    }
    let probs = renewal_probabilities(w, n_max, grid)?;
    let end_tail = *probs.tail.last().expect("non-empty grid");
    if end_tail.abs() > SERIES_TAIL_TOL {
        return Err(EngineError::TruncationTooTight { tail: end_tail, tolerance: SERIES_TAIL_TOL });
    }
    let mut norm = max_abs(rho0.matrix());
    let mut x = rho0.matrix().clone();
    for _ in 0..probs.n_max() {
        x = e.apply_unchecked(&x);
        norm = norm.max(max_abs(&x));
    }
    let states = probs.propagate(e, rho0.matrix());
    Ok(SeriesSolution {
        trajectory: StateTrajectory { grid: grid.points().to_vec(), states },
        error_bound: probs.tail.iter().map(|t| t.abs() * norm).collect(),
        n_max: probs.n_max(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::mittag_leffler;
    use statrs::function::gamma::gamma;

    fn poisson(n: usize, x: f64) -> f64 {
        let mut p = (-x).exp();
        for k in 1..=n {
            p *= x / k as f64;
        }
        p
    }

    #[test]
    fn poisson_probabilities() {
        let w = WaitingTimeDistribution::Exponential { rate: 0.5 };
        let grid = TimeGrid::uniform(20.0, 200).unwrap();
        let pr = renewal_probabilities(&w, None, &grid).unwrap();
        let mut worst = 0.0_f64;
        for n in 0..=10 {
            for (k, &t) in grid.points().iter().enumerate() {
                worst = worst.max((pr.probabilities[n][k] - poisson(n, 0.5 * t)).abs());
            }
        }
        assert!(worst < 1e-8, "{worst:e}");
        assert!(pr.tail.last().unwrap().abs() < 1e-6);
        assert_eq!(pr.probabilities[0][0], 1.0);
        assert!(pr.probabilities[1..].iter().all(|p| p[0] == 0.0));
    }

    #[test]
    fn mittag_leffler_moments() {
        let a = 0.5f64.sqrt();
        let w = WaitingTimeDistribution::MittagLeffler { amplitude: a, alpha: 0.5 };
        let grid = TimeGrid::uniform(20.0, 200).unwrap();
        let pr = renewal_probabilities(&w, None, &grid).unwrap();
        let mut worst_parity = 0.0_f64;
        let mut worst_mean = 0.0_f64;
        for (k, &t) in grid.points().iter().enumerate() {
            assert!((pr.probabilities[0][k] - mittag_leffler(0.5, a * t.sqrt()).unwrap()).abs() < 1e-6);
            let parity: f64 = pr.probabilities.iter().enumerate().map(|(n, p)| if n % 2 == 0 { p[k] } else { -p[k] }).sum();
            worst_parity = worst_parity.max((parity - mittag_leffler(0.5, 2.0 * a * t.sqrt()).unwrap()).abs());
            let mean: f64 = pr.probabilities.iter().enumerate().map(|(n, p)| n as f64 * p[k]).sum();
            worst_mean = worst_mean.max((mean - a * t.sqrt() / gamma(1.5)).abs());
        }
        assert!(worst_parity < 1e-5, "{worst_parity:e}");
        assert!(worst_mean < 1e-4, "{worst_mean:e}");
    }

    #[test]
    fn non_uniform_grid_rejected() {
        let w = WaitingTimeDistribution::Exponential { rate: 1.0 };
        let grid = TimeGrid::new(vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(renewal_probabilities(&w, None, &grid), Err(EngineError::NonUniformGrid));
    }

    #[test]
    fn coarse_grid_detected() {
        let w = WaitingTimeDistribution::Exponential { rate: 5.0 };
        let grid = TimeGrid::uniform(10.0, 4).unwrap();
        assert!(matches!(renewal_probabilities(&w, Some(5), &grid), Err(EngineError::GridTooCoarse(_))));
    }
}
