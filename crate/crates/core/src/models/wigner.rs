use super::ModelError;
use crate::engine::split_seed;
use crate::grid::TimeGrid;
use crate::kernels::{classify_kernel, sample_waiting, waiting_from_kernel, MemoryKernel, Verdict, WaitingTimeDistribution};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Open01, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Law of a single phase-space jump `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpLaw {
    /// Moments `⟨β⟩`, `⟨β²⟩`, `⟨|β|²⟩` (raw, not central).
    Gaussian { mean: Complex64, second: Complex64, abs2: f64 },
    PointMass { beta: Complex64 },
    /// Isotropic stable law with characteristic function `exp(−σ^μ|k|^μ)`.
    Levy { mu: f64, sigma: f64 },
}

impl JumpLaw {
    /// Isotropic zero-mean Gaussian with `⟨|β|²⟩ = abs2`.
    pub fn isotropic(abs2: f64) -> Self {
        Self::Gaussian { mean: Complex64::new(0.0, 0.0), second: Complex64::new(0.0, 0.0), abs2 }
    }

    /// Real covariance of `(Re β, Im β)` for the Gaussian law.
    fn covariance(mean: Complex64, second: Complex64, abs2: f64) -> [f64; 3] {
        let s = abs2 - mean.norm_sqr();
        let q = second - mean * mean;
        [0.5 * (s + q.re), 0.5 * (s - q.re), 0.5 * q.im]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            Self::Gaussian { mean, second, abs2 } => {
                let [xx, yy, xy] = Self::covariance(mean, second, abs2);
                let tol = 1e-12 * abs2.abs().max(1.0);
                if !(xx.is_finite() && yy.is_finite() && xy.is_finite()) || xx < -tol || yy < -tol || xx * yy - xy * xy < -tol * tol.max(xx.abs() + yy.abs()) {
                    return Err(ModelError::BadMoments(format!(
                        "moments <b> = {mean}, <b^2> = {second}, <|b|^2> = {abs2} do not define a covariance"
                    )));
                }
                Ok(())
            }
            Self::PointMass { beta } => {
                if beta.re.is_finite() && beta.im.is_finite() {
                    Ok(())
                } else {
                    Err(ModelError::BadParameters("jump must be finite".into()))
                }
            }
            Self::Levy { mu, sigma } => {
                if !(mu > 0.0 && mu <= 2.0) {
                    return Err(ModelError::BadParameters(format!("stability index must lie in (0, 2], got {mu}")));
                }
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(ModelError::BadParameters(format!("jump scale must be positive, got {sigma}")));
                }
                Ok(())
            }
        }
    }

    /// `⟨|β|²⟩`, when finite.
    pub fn mean_abs2(&self) -> Option<f64> {
        match *self {
            Self::Gaussian { abs2, .. } => Some(abs2),
            Self::PointMass { beta } => Some(beta.norm_sqr()),
            Self::Levy { mu, sigma } => (mu == 2.0).then_some(4.0 * sigma * sigma),
        }
    }

    /// `P̂(k) = E[exp(i Re(k* β))]`.
    pub fn characteristic(&self, k: Complex64) -> Complex64 {
        let phase = |z: Complex64| k.re * z.re + k.im * z.im;
        match *self {
            Self::Gaussian { mean, second, abs2 } => {
                let [xx, yy, xy] = Self::covariance(mean, second, abs2);
                let var = k.re * k.re * xx + k.im * k.im * yy + 2.0 * k.re * k.im * xy;
                Complex64::from_polar((-0.5 * var).exp(), phase(mean))
            }
            Self::PointMass { beta } => Complex64::from_polar(1.0, phase(beta)),
            Self::Levy { mu, sigma } => Complex64::new((-(sigma * k.norm()).powf(mu)).exp(), 0.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match *self {
            Self::Gaussian { mean, second, abs2 } => {
                let [xx, yy, xy] = Self::covariance(mean, second, abs2);
                let (g1, g2): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                // Cholesky of the 2x2 covariance, tolerant of rank one.
                let l11 = xx.max(0.0).sqrt();
                let l21 = if l11 > 0.0 { xy / l11 } else { 0.0 };
                let l22 = (yy - l21 * l21).max(0.0).sqrt();
                let y = if l11 > 0.0 { l21 * g1 + l22 * g2 } else { yy.max(0.0).sqrt() * g2 };
                mean + Complex64::new(l11 * g1, y)
            }
            Self::PointMass { beta } => beta,
            Self::Levy { mu, sigma } => {
                let w = if mu == 2.0 { 1.0 } else { positive_stable(0.5 * mu, rng) };
                let s = (2.0 * w).sqrt() * sigma;
                Complex64::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal))
            }
        }
    }
}

/// Positive stable variate with `E[e^{−sW}] = exp(−s^a)`, `0 < a < 1`
/// (totally skewed Chambers-Mallows-Stuck, in Kanter's form).
fn positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let e: f64 = rng.sample(Exp1);
    let x = PI * u;
    let num = (a * x).sin().powf(a / (1.0 - a)) * ((1.0 - a) * x).sin();
    let den = x.sin().powf(1.0 / (1.0 - a));
    (num / den / e).powf((1.0 - a) / a)
}

/// Decay rate of the Fourier mode `k` of the Wigner function,
/// `γ(k) = 1 − P̂(k)`.
pub fn fourier_mode_rate(law: &JumpLaw, k: Complex64) -> Complex64 {
    Complex64::new(1.0, 0.0) - law.characteristic(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialPhaseSpace {
    /// Every walker starts at `α0`.
    Point(Complex64),
    /// Wigner function of the coherent state `|α0⟩`: Gaussian with
    /// `⟨|α − α0|²⟩ = ½`.
    Coherent(Complex64),
}

impl InitialPhaseSpace {
    fn center(&self) -> Complex64 {
        match *self {
            Self::Point(a) | Self::Coherent(a) => a,
        }
    }

    /// `⟨a†a⟩` of the initial state (`|α0|²` in both cases).
    pub fn n0(&self) -> f64 {
        self.center().norm_sqr()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match *self {
            Self::Point(a) => a,
            Self::Coherent(a) => {
                let s = 0.5;
                a + Complex64::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct WignerWalkConfig {
    pub jump: JumpLaw,
    pub kernel: MemoryKernel,
    pub n_walkers: usize,
    pub initial: InitialPhaseSpace,
    pub histogram_bins: usize,
    /// Outer edge of the radial histogram, measured from the initial center.
    /// Defaults to the largest displacement seen.
    pub histogram_radius: Option<f64>,
}

impl WignerWalkConfig {
    pub fn new(jump: JumpLaw, kernel: MemoryKernel, n_walkers: usize) -> Self {
        Self {
            jump,
            kernel,
            n_walkers,
            initial: InitialPhaseSpace::Point(Complex64::new(0.0, 0.0)),
            histogram_bins: 50,
            histogram_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialHistogram {
    /// `bins + 1` edges of `|α − α0|`.
    pub edges: Vec<f64>,
    /// Walker counts per grid time and bin; walkers beyond the last edge
    /// are not counted.
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerResult {
    pub grid: Vec<f64>,
    /// `positions[i][w]`: walker `w` at grid time `i`.
    pub positions: Vec<Vec<Complex64>>,
    pub mean_count: Vec<f64>,
    pub count_stderr: Vec<f64>,
    /// `n(0) + ⟨|β|²⟩ × mean event count`; `None` for infinite-variance jumps.
    pub n_estimate: Option<Vec<f64>>,
    pub n_estimate_stderr: Option<Vec<f64>>,
    /// `n(0) + mean(|α(t)|² − |α(0)|²)` from the positions themselves.
    pub n_positions: Vec<f64>,
    pub n_positions_stderr: Vec<f64>,
    pub histogram: RadialHistogram,
}

struct Walker {
    counts: Vec<u32>,
    positions: Vec<Complex64>,
    start: Complex64,
}

fn walk(cfg: &WignerWalkConfig, w: &WaitingTimeDistribution, grid: &[f64], seed: u64) -> Walker {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = cfg.initial.sample(&mut rng);
    let mut pos = start;
    let mut count = 0u32;
    let mut next = sample_waiting(w, &mut rng);
    let mut counts = Vec::with_capacity(grid.len());
    let mut positions = Vec::with_capacity(grid.len());
    for &t in grid {
        while next <= t {
            pos += cfg.jump.sample(&mut rng);
            count += 1;
            next += sample_waiting(w, &mut rng);
        }
        counts.push(count);
        positions.push(pos);
    }
    Walker { counts, positions, start }
}

fn mean_stderr(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut n = 0.0;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for x in values {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    let var = if n > 1.0 { m2 / (n - 1.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

/// Classical CTRW of phase-space points: each walker keeps its own renewal
/// clock and jumps by independent draws from the jump law. Walker `k` uses
/// `split_seed(base_seed, k)`, so results do not depend on thread count.
pub fn wigner_ctrw(cfg: &WignerWalkConfig, grid: &TimeGrid, base_seed: u64) -> Result<WignerResult, ModelError> {
    cfg.jump.validate()?;
    if cfg.n_walkers == 0 {
        return Err(ModelError::BadParameters("n_walkers must be at least 1".into()));
    }
    if cfg.histogram_bins == 0 {
        return Err(ModelError::BadParameters("histogram_bins must be at least 1".into()));
    }
    if let Verdict::Dangerous = classify_kernel(&cfg.kernel)?.verdict {
        return Err(ModelError::DangerousKernel(format!("{} kernel has no waiting-time density", cfg.kernel.name())));
    }
    let w = waiting_from_kernel(&cfg.kernel)?;
    let points = grid.points();
    let walkers: Vec<Walker> = (0..cfg.n_walkers)
        .into_par_iter()
        .map(|k| walk(cfg, &w, points, split_seed(base_seed, k as u64)))
        .collect();

    let n0 = cfg.initial.n0();
    let mut mean_count = Vec::with_capacity(points.len());
    let mut count_stderr = Vec::with_capacity(points.len());
    let mut n_positions = Vec::with_capacity(points.len());
    let mut n_positions_stderr = Vec::with_capacity(points.len());
    for i in 0..points.len() {
        let (m, s) = mean_stderr(walkers.iter().map(|wk| wk.counts[i] as f64));
        mean_count.push(m);
        count_stderr.push(s);
        let (m, s) = mean_stderr(walkers.iter().map(|wk| wk.positions[i].norm_sqr() - wk.start.norm_sqr()));
        n_positions.push(n0 + m);
        n_positions_stderr.push(s);
    }
    let abs2 = cfg.jump.mean_abs2();
    let n_estimate = abs2.map(|s| mean_count.iter().map(|c| n0 + s * c).collect());
    let n_estimate_stderr = abs2.map(|s| count_stderr.iter().map(|e| s * e).collect());

    let center = cfg.initial.center();
    let radius = cfg.histogram_radius.unwrap_or_else(|| {
        walkers
            .iter()
            .flat_map(|wk| wk.positions.iter().map(|p| (p - center).norm()))
            .fold(0.0, f64::max)
    });
    let radius = if radius > 0.0 { radius } else { 1.0 };
    let bins = cfg.histogram_bins;
    let edges: Vec<f64> = (0..=bins).map(|b| radius * b as f64 / bins as f64).collect();
    let counts = (0..points.len())
        .map(|i| {
            let mut h = vec![0u64; bins];
            for wk in &walkers {
                let r = (wk.positions[i] - center).norm();
                if r <= radius {
                    h[((r / radius * bins as f64) as usize).min(bins - 1)] += 1;
                }
            }
            h
        })
        .collect();

    let positions = (0..points.len()).map(|i| walkers.iter().map(|wk| wk.positions[i]).collect()).collect();
    Ok(WignerResult {
        grid: points.to_vec(),
        positions,
        mean_count,
        count_stderr,
        n_estimate,
        n_estimate_stderr,
        n_positions,
        n_positions_stderr,
        histogram: RadialHistogram { edges, counts },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn mode_rates() {
        let laws = [
            JumpLaw::isotropic(0.3),
            JumpLaw::PointMass { beta: c(0.2, 0.1) },
            JumpLaw::Levy { mu: 1.3, sigma: 0.7 },
        ];
        for law in laws {
            assert_eq!(fourier_mode_rate(&law, c(0.0, 0.0)), c(0.0, 0.0));
        }
        let r = fourier_mode_rate(&JumpLaw::Levy { mu: 1.0, sigma: 1.0 }, c(2.0, 0.0));
        assert!((r.re - 0.864665).abs() < 1e-6 && r.im == 0.0);
        // μ = 2 against the isotropic Gaussian with ⟨|β|²⟩ = 4σ².
        let sigma = 0.35;
        let k = c(0.8, -1.1);
        let lev = fourier_mode_rate(&JumpLaw::Levy { mu: 2.0, sigma }, k);
        let gau = fourier_mode_rate(&JumpLaw::isotropic(4.0 * sigma * sigma), k);
        assert!((lev - gau).norm() < 1e-15);
    }

    #[test]
    fn gaussian_samples_match_moments() {
        let law = JumpLaw::Gaussian { mean: c(0.3, -0.2), second: c(0.2, 0.1), abs2: 0.6 };
        law.validate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let (mut m, mut q, mut s) = (c(0.0, 0.0), c(0.0, 0.0), 0.0);
        for _ in 0..n {
            let b = law.sample(&mut rng);
            m += b;
            q += b * b;
            s += b.norm_sqr();
        }
        let n = n as f64;
        assert!((m / n - c(0.3, -0.2)).norm() < 5e-3);
        assert!((q / n - c(0.2, 0.1)).norm() < 1e-2);
        assert!((s / n - 0.6).abs() < 1e-2);
        let bad = JumpLaw::Gaussian { mean: c(1.0, 0.0), second: c(1.0, 0.0), abs2: 0.5 };
        assert!(matches!(bad.validate(), Err(ModelError::BadMoments(_))));
    }

    #[test]
    fn levy_samples_match_characteristic_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        for (mu, sigma) in [(1.0, 1.0), (1.5, 0.5), (0.6, 2.0)] {
            let law = JumpLaw::Levy { mu, sigma };
            let samples: Vec<Complex64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            for k in [c(0.3, 0.0), c(0.5, 0.5), c(0.0, 1.2)] {
                let emp: f64 = samples.iter().map(|b| (k.re * b.re + k.im * b.im).cos()).sum::<f64>() / n as f64;
                let want = law.characteristic(k).re;
                // Standard error of a bounded mean ≤ 1/√n.
                assert!((emp - want).abs() < 5.0 / (n as f64).sqrt(), "mu={mu} k={k}: {emp} vs {want}");
            }
        }
    }

    #[test]
    fn static_walkers_for_zero_jump() {
        let cfg = WignerWalkConfig {
            initial: InitialPhaseSpace::Point(c(1.0, 2.0)),
            ..WignerWalkConfig::new(JumpLaw::PointMass { beta: c(0.0, 0.0) }, MemoryKernel::markovian(1.0).unwrap(), 100)
        };
        let r = wigner_ctrw(&cfg, &TimeGrid::uniform(5.0, 11).unwrap(), 1).unwrap();
        for (i, n) in r.n_estimate.unwrap().iter().enumerate() {
            assert_eq!(*n, 5.0);
            assert_eq!(r.n_positions[i], 5.0);
        }
        assert!(r.positions.iter().flatten().all(|p| *p == c(1.0, 2.0)));
    }

    #[test]
    fn markovian_excitation_is_linear() {
        let a1 = 0.8;
        let cfg = WignerWalkConfig::new(JumpLaw::isotropic(0.05), MemoryKernel::markovian(a1).unwrap(), 4000);
        let grid = TimeGrid::uniform(10.0, 21).unwrap();
        let r = wigner_ctrw(&cfg, &grid, 7).unwrap();
        let est = r.n_estimate.unwrap();
        let err = r.n_estimate_stderr.unwrap();
        for (i, &t) in grid.points().iter().enumerate().skip(1) {
            let want = 0.05 * a1 * t;
            assert!((est[i] - want).abs() < 3.0 * err[i].max(1e-12), "t={t}");
            assert!((r.n_positions[i] - want).abs() < 4.0 * r.n_positions_stderr[i], "t={t}");
        }
        let total: u64 = r.histogram.counts[20].iter().sum();
        assert_eq!(total, 4000);
    }

    #[test]
    fn deterministic_in_seed() {
        let cfg = WignerWalkConfig::new(JumpLaw::Levy { mu: 1.2, sigma: 0.1 }, MemoryKernel::fractional(1.0, 0.6).unwrap(), 300);
        let grid = TimeGrid::uniform(3.0, 7).unwrap();
        let a = wigner_ctrw(&cfg, &grid, 42).unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| wigner_ctrw(&cfg, &grid, 42).unwrap());
        assert_eq!(a, b);
        assert!(a.n_estimate.is_none());
    }

    #[test]
    fn dangerous_kernel_refused() {
        let cfg = WignerWalkConfig::new(JumpLaw::isotropic(0.1), MemoryKernel::exponential(0.25, 0.5).unwrap(), 10);
        let r = wigner_ctrw(&cfg, &TimeGrid::uniform(1.0, 3).unwrap(), 0);
        assert!(matches!(r, Err(ModelError::DangerousKernel(_))));
    }
}
