//! Memory kernels `K(t)`, their waiting-time duals `w(t)`, safe/dangerous
//! classification, Mittag-Leffler functions and renewal samplers.

mod classify;
mod mittag_leffler;
mod waiting;

pub use classify::{classify_kernel, Certificate, KernelVerdict, Verdict};
pub use mittag_leffler::{mittag_leffler, mittag_leffler_aa};
pub use waiting::{
    sample_waiting, waiting_from_kernel, waiting_pdf, waiting_survival, EmpiricalWaiting,
    WaitingTimeDistribution,
};

pub(crate) use mittag_leffler::rgamma;

use crate::numerics::{talbot_invert, TALBOT_NODES};
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("argument outside the domain: {0}")]
    DomainError(String),
    #[error("invalid kernel parameters: {0}")]
    InvalidParameters(String),
    #[error("kernel does not induce a waiting-time distribution: w({t}) < 0 (scaled value {witness:e})")]
    NotADistribution { t: f64, witness: f64 },
    #[error("dangerous kernel: {0}")]
    DangerousKernel(String),
    #[error("custom Laplace transform failed: {0}")]
    CustomFailure(String),
}

/// Laplace-domain kernel supplied by the caller; must accept complex `u`
/// in the right half-plane so it can be inverted numerically.
#[derive(Clone)]
pub struct CustomKernel {
    pub label: String,
    /// Characteristic rate (1/sec) used to place grids and define `T`.
    pub scale: f64,
    laplace: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
}

impl CustomKernel {
    pub fn new<F>(label: impl Into<String>, scale: f64, laplace: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        Self { label: label.into(), scale, laplace: Arc::new(laplace) }
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        (self.laplace)(u)
    }
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel").field("label", &self.label).field("scale", &self.scale).finish()
    }
}

/// `K(t)` through its Laplace transform `K̃(u)`.
#[derive(Debug, Clone)]
pub enum MemoryKernel {
    /// `K(t) = A₁ δ(t)`.
    Markovian { a1: f64 },
    /// `K(t) = A_ε e^{−γt}`.
    Exponential { a_eps: f64, gamma: f64 },
    /// `K̃(u) = A_α u^{1−α}`.
    Fractional { a_alpha: f64, alpha: f64 },
    CustomLaplace(CustomKernel),
}

fn positive(name: &str, v: f64) -> Result<(), KernelError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(KernelError::InvalidParameters(format!("{name} must be positive and finite, got {v}")))
    }
}

impl MemoryKernel {
    pub fn markovian(a1: f64) -> Result<Self, KernelError> {
        let k = Self::Markovian { a1 };
        k.validate()?;
        Ok(k)
    }

    pub fn exponential(a_eps: f64, gamma: f64) -> Result<Self, KernelError> {
        let k = Self::Exponential { a_eps, gamma };
        k.validate()?;
        Ok(k)
    }

    pub fn fractional(a_alpha: f64, alpha: f64) -> Result<Self, KernelError> {
        let k = Self::Fractional { a_alpha, alpha };
        k.validate()?;
        Ok(k)
    }

    pub fn custom<F>(label: impl Into<String>, scale: f64, laplace: F) -> Result<Self, KernelError>
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        let k = Self::CustomLaplace(CustomKernel::new(label, scale, laplace));
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        match self {
            Self::Markovian { a1 } => positive("A1", *a1),
            Self::Exponential { a_eps, gamma } => {
                positive("A_eps", *a_eps)?;
                positive("gamma", *gamma)
            }
            Self::Fractional { a_alpha, alpha } => {
                positive("A_alpha", *a_alpha)?;
                if *alpha > 0.0 && *alpha <= 1.0 {
                    Ok(())
                } else {
                    Err(KernelError::InvalidParameters(format!("alpha must lie in (0, 1], got {alpha}")))
                }
            }
            Self::CustomLaplace(c) => positive("scale", c.scale),
        }
    }

    /// `K̃(u)` at complex `u`.
    pub fn laplace(&self, u: Complex64) -> Complex64 {
        match self {
            Self::Markovian { a1 } => Complex64::new(*a1, 0.0),
            Self::Exponential { a_eps, gamma } => *a_eps / (u + gamma),
            Self::Fractional { a_alpha, alpha } => *a_alpha * u.powf(1.0 - alpha),
            Self::CustomLaplace(c) => c.eval(u),
        }
    }

    /// Time unit `T` with `T⁻¹ = A₁ = A_α^{1/α} = A_ε/γ`.
    pub fn time_scale(&self) -> f64 {
        match self {
            Self::Markovian { a1 } => 1.0 / a1,
            Self::Exponential { a_eps, gamma } => gamma / a_eps,
            Self::Fractional { a_alpha, alpha } => a_alpha.powf(-1.0 / alpha),
            Self::CustomLaplace(c) => 1.0 / c.scale,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Markovian { .. } => "markovian",
            Self::Exponential { .. } => "exponential",
            Self::Fractional { .. } => "fractional",
            Self::CustomLaplace(_) => "custom",
        }
    }
}

/// `K̃(u)` for real `u > 0`.
pub fn kernel_laplace(k: &MemoryKernel, u: f64) -> Result<f64, KernelError> {
    k.validate()?;
    if !(u > 0.0 && u.is_finite()) {
        return Err(KernelError::DomainError(format!("Laplace variable must be positive, got {u}")));
    }
    let v = k.laplace(Complex64::new(u, 0.0));
    if !v.re.is_finite() || v.im.abs() > 1e-9 * v.re.abs().max(1.0) {
        return Err(KernelError::CustomFailure(format!("K~({u}) = {v} is not a finite real")));
    }
    Ok(v.re)
}

/// `x − (1 − e^{−x})` without cancellation.
fn exp_rem2(x: f64) -> f64 {
    if x < 0.1 {
        let mut term = x * x / 2.0;
        let mut sum = 0.0;
        for n in 2..20 {
            sum += term;
            term *= -x / (n + 1) as f64;
        }
        sum
    } else {
        x + (-x).exp_m1()
    }
}

/// `x²/2 − x + 1 − e^{−x}` without cancellation.
fn exp_rem3(x: f64) -> f64 {
    if x < 0.5 {
        let mut term = x * x * x / 6.0;
        let mut sum = 0.0;
        for n in 3..30 {
            sum += term;
            term *= -x / (n + 1) as f64;
        }
        sum
    } else {
        x * x / 2.0 - x - (-x).exp_m1()
    }
}

/// Iterated integrals of the kernel: `L⁻¹[K̃(u)/u^order](t)` for order 1..=3.
///
/// Order 2 is the renewal mean count `∫₀ᵗ K(t−τ) τ dτ`.
pub fn kernel_integral(k: &MemoryKernel, order: u32, t: f64) -> Result<f64, KernelError> {
    k.validate()?;
    if !(1..=3).contains(&order) {
        return Err(KernelError::DomainError(format!("kernel integral order must be 1, 2 or 3, got {order}")));
    }
    if !(t >= 0.0) {
        return Err(KernelError::DomainError(format!("time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let n = order as i32;
    Ok(match k {
        MemoryKernel::Markovian { a1 } => a1 * t.powi(n - 1) / [1.0, 1.0, 2.0][(n - 1) as usize],
        MemoryKernel::Fractional { a_alpha, alpha } => a_alpha * t.powf(alpha + (n - 2) as f64) * rgamma(alpha + (n - 1) as f64),
        MemoryKernel::Exponential { a_eps, gamma } => {
            let x = gamma * t;
            match order {
                1 => a_eps / gamma * -(-x).exp_m1(),
                2 => a_eps / (gamma * gamma) * exp_rem2(x),
                _ => a_eps / (gamma * gamma * gamma) * exp_rem3(x),
            }
        }
        MemoryKernel::CustomLaplace(c) => {
            let v = talbot_invert(|u| c.eval(u) / u.powi(n), t, TALBOT_NODES);
            if !v.is_finite() {
                return Err(KernelError::CustomFailure(format!("inversion of K~/u^{order} at t={t} is not finite")));
            }
            v
        }
    })
}


/// Expected number of renewal events `⟨N(t)⟩ = ∫₀ᵗ K(t−τ) τ dτ`.
pub fn renewal_mean_count(k: &MemoryKernel, t: f64) -> Result<f64, KernelError> {
    let verdict = classify_kernel(k)?;
    if let Verdict::Dangerous = verdict.verdict {
        return Err(KernelError::DangerousKernel(verdict.certificate.to_string()));
    }
    kernel_integral(k, 2, t)
}
