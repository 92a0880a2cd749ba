use super::{classify_kernel, mittag_leffler, mittag_leffler_aa, KernelError, MemoryKernel, Verdict};
use crate::numerics::{integrate, talbot_invert, TALBOT_NODES};
use rand::distr::Open01;
use rand::Rng;
use std::f64::consts::PI;

/// Tabulated waiting-time density with linear interpolation; mass beyond
/// the last node is kept as an atom at infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalWaiting {
    times: Vec<f64>,
    pdf: Vec<f64>,
    survival: Vec<f64>,
}

impl EmpiricalWaiting {
    /// `times` must start at 0 and increase; `pdf` must be non-negative.
    pub fn new(times: Vec<f64>, pdf: Vec<f64>) -> Result<Self, KernelError> {
        if times.len() < 2 || times.len() != pdf.len() {
            return Err(KernelError::InvalidParameters("need matching time/pdf tables with at least two rows".into()));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(KernelError::InvalidParameters("times must start at 0 and strictly increase".into()));
        }
        if let Some(k) = pdf.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(KernelError::NotADistribution { t: times[k], witness: pdf[k] });
        }
        let mut survival = vec![1.0; times.len()];
        for k in 1..times.len() {
            survival[k] = survival[k - 1] - 0.5 * (pdf[k] + pdf[k - 1]) * (times[k] - times[k - 1]);
        }
        // Allow trapezoid overshoot of the normalization, then clamp.
        if survival.last().copied().unwrap_or(1.0) < -1e-3 {
            return Err(KernelError::InvalidParameters("tabulated pdf integrates to more than 1".into()));
        }
        for s in survival.iter_mut() {
            *s = s.max(0.0);
        }
        Ok(Self { times, pdf, survival })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn densities(&self) -> &[f64] {
        &self.pdf
    }

    /// Probability that no event ever happens within the table.
    pub fn tail_mass(&self) -> f64 {
        self.survival.last().copied().unwrap_or(0.0).max(0.0)
    }

    fn cell(&self, t: f64) -> Option<usize> {
        if t >= *self.times.last().unwrap() {
            return None;
        }
        Some(self.times.partition_point(|&x| x <= t) - 1)
    }

    fn pdf_at(&self, t: f64) -> f64 {
        match self.cell(t) {
            None => 0.0,
            Some(k) => {
                let f = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
                self.pdf[k] + f * (self.pdf[k + 1] - self.pdf[k])
            }
        }
    }

    fn survival_at(&self, t: f64) -> f64 {
        match self.cell(t) {
            None => self.tail_mass(),
            Some(k) => {
                let dt = t - self.times[k];
                let slope = (self.pdf[k + 1] - self.pdf[k]) / (self.times[k + 1] - self.times[k]);
                self.survival[k] - self.pdf[k] * dt - 0.5 * slope * dt * dt
            }
        }
    }

    fn inverse_cdf(&self, u: f64) -> f64 {
        // Solve 1 − S(t) = u.
        let target = 1.0 - u;
        if target < self.tail_mass() {
            return f64::INFINITY;
        }
        let k = self.survival.partition_point(|&s| s > target).max(1) - 1;
        let k = k.min(self.times.len() - 2);
        let h = self.times[k + 1] - self.times[k];
        let a = 0.5 * (self.pdf[k + 1] - self.pdf[k]) / h;
        let b = self.pdf[k];
        let c = target - self.survival[k];
        // a dt² + b dt + c = 0 with c ≤ 0.
        let dt = if a.abs() < 1e-300 {
            if b > 0.0 {
                -c / b
            } else {
                0.0
            }
        } else {
            let disc = (b * b - 4.0 * a * c).max(0.0);
            (-c * 2.0) / (b + disc.sqrt())
        };
        self.times[k] + dt.clamp(0.0, h)
    }
}

/// Density of the renewal intervals.
#[derive(Debug, Clone, PartialEq)]
pub enum WaitingTimeDistribution {
    /// `w(t) = A₁ e^{−A₁t}`.
    Exponential { rate: f64 },
    /// Sum of two independent exponentials with rates `r1 ≤ r2`.
    Hypoexponential { r1: f64, r2: f64 },
    /// Survival `E_α(−A t^α)`.
    MittagLeffler { amplitude: f64, alpha: f64 },
    Empirical(EmpiricalWaiting),
}

/// `(1 − e^{−δt})/δ`, equal to `t` at `δ = 0`.
fn phi(delta: f64, t: f64) -> f64 {
    if delta == 0.0 {
        t
    } else {
        -(-delta * t).exp_m1() / delta
    }
}

impl WaitingTimeDistribution {
    pub fn pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { rate } => rate * (-rate * t).exp(),
            Self::Hypoexponential { r1, r2 } => r1 * r2 * (-r1 * t).exp() * phi(r2 - r1, t),
            Self::MittagLeffler { amplitude, alpha } => {
                if t == 0.0 {
                    return if *alpha == 1.0 { *amplitude } else { f64::INFINITY };
                }
                let x = amplitude * t.powf(*alpha);
                amplitude * t.powf(alpha - 1.0) * mittag_leffler_aa(*alpha, x).expect("validated parameters")
            }
            Self::Empirical(e) => e.pdf_at(t),
        }
    }

    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match self {
            Self::Exponential { rate } => (-rate * t).exp(),
            Self::Hypoexponential { r1, r2 } => (-r1 * t).exp() * (1.0 + r1 * phi(r2 - r1, t)),
            Self::MittagLeffler { amplitude, alpha } => {
                mittag_leffler(*alpha, amplitude * t.powf(*alpha)).expect("validated parameters")
            }
            Self::Empirical(e) => e.survival_at(t),
        }
    }

    /// `∫_a^b S(t) dt`.
    pub fn survival_integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Self::Exponential { rate } => ((-rate * a).exp() - (-rate * b).exp()) / rate,
            _ => integrate(|t| self.survival(t), a, b, 1e-15, 1e-13).value,
        }
    }

    /// Mean interval, `None` when it diverges.
    pub fn mean(&self) -> Option<f64> {
        match self {
            Self::Exponential { rate } => Some(1.0 / rate),
            Self::Hypoexponential { r1, r2 } => Some(1.0 / r1 + 1.0 / r2),
            Self::MittagLeffler { amplitude, alpha } => (*alpha == 1.0).then(|| 1.0 / amplitude),
            Self::Empirical(e) => {
                if e.tail_mass() > 0.0 {
                    return None;
                }
                let mut m = 0.0;
                for k in 1..e.times.len() {
                    let (t0, t1) = (e.times[k - 1], e.times[k]);
                    m += 0.5 * (t0 * e.pdf[k - 1] + t1 * e.pdf[k]) * (t1 - t0);
                }
                Some(m)
            }
        }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(KernelError::InvalidParameters(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            Self::Exponential { rate } => pos("rate", *rate),
            Self::Hypoexponential { r1, r2 } => {
                pos("r1", *r1)?;
                pos("r2", *r2)?;
                if r1 > r2 {
                    return Err(KernelError::InvalidParameters("hypoexponential rates must satisfy r1 <= r2".into()));
                }
                Ok(())
            }
            Self::MittagLeffler { amplitude, alpha } => {
                pos("amplitude", *amplitude)?;
                if *alpha > 0.0 && *alpha <= 1.0 {
                    Ok(())
                } else {
                    Err(KernelError::InvalidParameters(format!("alpha must lie in (0, 1], got {alpha}")))
                }
            }
            Self::Empirical(_) => Ok(()),
        }
    }

    /// Draws one interval from two independent uniforms in `(0, 1)`.
    pub fn sample_from_uniforms(&self, u: f64, v: f64) -> f64 {
        match self {
            Self::Exponential { rate } => -u.ln() / rate,
            Self::Hypoexponential { r1, r2 } => -u.ln() / r1 - v.ln() / r2,
            Self::MittagLeffler { amplitude, alpha } => {
                let ap = alpha * PI;
                let stable = (ap.sin() / (ap * v).tan() - ap.cos()).powf(1.0 / alpha);
                -u.ln() * stable / amplitude.powf(1.0 / alpha)
            }
            Self::Empirical(e) => e.inverse_cdf(u),
        }
    }
}

pub fn waiting_pdf(w: &WaitingTimeDistribution, t: f64) -> f64 {
    w.pdf(t)
}

pub fn waiting_survival(w: &WaitingTimeDistribution, t: f64) -> f64 {
    w.survival(t)
}

/// One renewal interval.
pub fn sample_waiting<R: Rng + ?Sized>(w: &WaitingTimeDistribution, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let v: f64 = rng.sample(Open01);
    w.sample_from_uniforms(u, v)
}

/// Waiting-time law dual to `K` through `w̃ = K̃/(u + K̃)`.
pub fn waiting_from_kernel(k: &MemoryKernel) -> Result<WaitingTimeDistribution, KernelError> {
    k.validate()?;
    match k {
        MemoryKernel::Markovian { a1 } => Ok(WaitingTimeDistribution::Exponential { rate: *a1 }),
        MemoryKernel::Fractional { a_alpha, alpha } => {
            Ok(WaitingTimeDistribution::MittagLeffler { amplitude: *a_alpha, alpha: *alpha })
        }
        MemoryKernel::Exponential { a_eps, gamma } => {
            let disc = gamma * gamma - 4.0 * a_eps;
            if disc < 0.0 {
                let verdict = classify_kernel(k)?;
                return match verdict.certificate {
                    super::Certificate::NegativeWaiting { t, scaled_pdf, .. } => {
                        Err(KernelError::NotADistribution { t, witness: scaled_pdf })
                    }
                    other => Err(KernelError::DangerousKernel(other.to_string())),
                };
            }
            let s = disc.sqrt();
            // r1 = (γ − s)/2 computed as A/r2 to avoid cancellation.
            let r2 = 0.5 * (gamma + s);
            let r1 = a_eps / r2;
            Ok(WaitingTimeDistribution::Hypoexponential { r1, r2 })
        }
        MemoryKernel::CustomLaplace(c) => {
            let verdict = classify_kernel(k)?;
            if let Verdict::Dangerous = verdict.verdict {
                if let super::Certificate::NegativeWaiting { t, scaled_pdf, .. } = verdict.certificate {
                    return Err(KernelError::NotADistribution { t, witness: scaled_pdf });
                }
                return Err(KernelError::DangerousKernel(verdict.certificate.to_string()));
            }
            let n = 4001;
            let t_end = 200.0 / c.scale;
            // Quadratically graded nodes: fine where the density is large.
            let times: Vec<f64> = (0..n)
                .map(|i| {
                    let f = i as f64 / (n - 1) as f64;
                    t_end * f * f
                })
                .collect();
            let mut pdf: Vec<f64> = times
                .iter()
                .map(|&t| {
                    if t == 0.0 {
                        0.0
                    } else {
                        talbot_invert(|u| c.eval(u) / (u + c.eval(u)), t, TALBOT_NODES)
                    }
                })
                .collect();
            pdf[0] = (2.0 * pdf[1] - pdf[2]).max(0.0);
            let peak = pdf.iter().copied().fold(0.0, f64::max);
            if let Some(i) = pdf.iter().position(|p| !p.is_finite() || *p < -1e-8 * peak.max(1e-300)) {
                return Err(KernelError::NotADistribution { t: times[i], witness: pdf[i] });
            }
            for p in pdf.iter_mut() {
                *p = p.max(0.0);
            }
            Ok(WaitingTimeDistribution::Empirical(EmpiricalWaiting::new(times, pdf)?))
        }
    }
}
