use super::SolverError;
use crate::kernels::{mittag_leffler, MemoryKernel};
use crate::numerics::{talbot_invert_complex, TALBOT_NODES};
use num_complex::Complex64;

const SINC_GUARD: f64 = 1e-6;

/// `h_λ(t)`: the scalar solution of `dh/dt = −λ ∫₀ᵗ K(t−τ) h(τ) dτ`, `h(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayFunction {
    /// `e^{−γt/2}[cosh(Φt/2) + (γ/Φ) sinh(Φt/2)]`, `Φ² = γ² − 4λA_ε`.
    TelegraphH { gamma: f64, phi: Complex64 },
    /// `E_α(−rate·t^α)`, `rate = λA_α`.
    MittagLefflerH { alpha: f64, rate: Complex64 },
    /// `e^{−rate·t}`, `rate = λA₁`.
    MarkovExp { rate: Complex64 },
}

impl DecayFunction {
    /// Decay function for eigenvalue `λ` under one of the closed-form kernels.
    pub fn for_kernel(kernel: &MemoryKernel, lambda: Complex64) -> Result<Self, SolverError> {
        kernel.validate()?;
        Ok(match *kernel {
            MemoryKernel::Markovian { a1 } => Self::MarkovExp { rate: lambda * a1 },
            MemoryKernel::Exponential { a_eps, gamma } => {
                Self::TelegraphH { gamma, phi: (gamma * gamma - 4.0 * lambda * a_eps).sqrt() }
            }
            MemoryKernel::Fractional { a_alpha, alpha } => Self::MittagLefflerH { alpha, rate: lambda * a_alpha },
            MemoryKernel::CustomLaplace(_) => {
                return Err(SolverError::UnsupportedKernel(
                    "custom kernels have no closed-form decay function".into(),
                ))
            }
        })
    }

    pub fn eval(&self, t: f64) -> Result<Complex64, SolverError> {
        if t == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok(match *self {
            Self::MarkovExp { rate } => (-rate * t).exp(),
            Self::TelegraphH { gamma, phi } => telegraph_complex(t, gamma, phi),
            Self::MittagLefflerH { alpha, rate } => {
                if rate.im == 0.0 && rate.re >= 0.0 {
                    Complex64::new(mittag_leffler(alpha, rate.re * t.powf(alpha))?, 0.0)
                } else {
                    mittag_leffler_complex(alpha, rate, t)
                }
            }
        })
    }
}

/// `sinh(z)/z` with a series near zero.
fn shc(z: Complex64) -> Complex64 {
    if z.norm() < SINC_GUARD {
        1.0 + z * z / 6.0
    } else {
        z.sinh() / z
    }
}

fn telegraph_complex(t: f64, gamma: f64, phi: Complex64) -> Complex64 {
    let z = phi * (0.5 * t);
    if z.norm() < 1.0 {
        return (-0.5 * gamma * t).exp() * (z.cosh() + 0.5 * gamma * t * shc(z));
    }
    // Φ − γ = (Φ² − γ²)/(Φ + γ) keeps small λ accurate.
    let slow = (phi * phi - gamma * gamma) / (phi + gamma);
    let g = gamma / phi;
    0.5 * (1.0 + g) * (slow * (0.5 * t)).exp() + 0.5 * (1.0 - g) * (-(phi + gamma) * (0.5 * t)).exp()
}

/// `E_α(−rate·t^α)` for complex `rate` by inverting `1/(u + rate·u^{1−α})`.
/// A pole at `u₀^α = −rate` on the principal sheet is removed analytically
/// (residue `1/α`) before the contour inversion.
fn mittag_leffler_complex(alpha: f64, rate: Complex64, t: f64) -> Complex64 {
    if alpha == 1.0 {
        return (-rate * t).exp();
    }
    let z = -rate;
    let pole = (z.arg().abs() < alpha * std::f64::consts::PI).then(|| (z.ln() / alpha).exp());
    let f = |u: Complex64| {
        let base = 1.0 / (u + rate * u.powf(1.0 - alpha));
        match pole {
            Some(p) => base - 1.0 / (alpha * (u - p)),
            None => base,
        }
    };
    let rest = talbot_invert_complex(f, t, TALBOT_NODES);
    match pole {
        Some(p) => rest + (p * t).exp() / alpha,
        None => rest,
    }
}

/// Real telegraph relaxation function for eigenvalue `lam ≥ 0`.
///
/// Uses cos/sinc in the oscillatory regime `γ² < 4λA_ε` and the limit
/// `e^{−γt/2}(1 + γt/2)` at `Φ = 0`.
pub fn telegraph_h(t: f64, lam: f64, gamma: f64, a_eps: f64) -> f64 {
    let disc = gamma * gamma - 4.0 * lam * a_eps;
    let damp = (-0.5 * gamma * t).exp();
    if disc < 0.0 {
        let x = 0.5 * (-disc).sqrt() * t;
        let sinc = if x.abs() < SINC_GUARD { 1.0 - x * x / 6.0 } else { x.sin() / x };
        return damp * (x.cos() + 0.5 * gamma * t * sinc);
    }
    let phi = disc.sqrt();
    let x = 0.5 * phi * t;
    if x < 1.0 {
        let shc = if x < SINC_GUARD { 1.0 + x * x / 6.0 } else { x.sinh() / x };
        return damp * (x.cosh() + 0.5 * gamma * t * shc);
    }
    let slow = -4.0 * lam * a_eps / (phi + gamma);
    let g = gamma / phi;
    0.5 * (1.0 + g) * (0.5 * slow * t).exp() + 0.5 * (1.0 - g) * (-0.5 * (phi + gamma) * t).exp()
}

/// `h_λ(t)` for any kernel; custom kernels go through `1/(u + λK̃(u))`.
pub fn relaxation(kernel: &MemoryKernel, lambda: Complex64, t: f64) -> Result<Complex64, SolverError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SolverError::Numerical(format!("time must be finite and >= 0, got {t}")));
    }
    if lambda == Complex64::new(0.0, 0.0) || t == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    match kernel {
        MemoryKernel::CustomLaplace(c) => {
            kernel.validate()?;
            let v = talbot_invert_complex(|u| 1.0 / (u + lambda * c.eval(u)), t, TALBOT_NODES);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(SolverError::Numerical(format!("inversion of the relaxation transform failed at t={t}")));
            }
            Ok(v)
        }
        _ => DecayFunction::for_kernel(kernel, lambda)?.eval(t),
    }
}
