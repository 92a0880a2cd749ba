//! The Mittag-Leffler functions `E_α(−x)` and `E_{α,α}(−x)` for real
//! `x ≥ 0` and `0 < α ≤ 1`.
//!
//! Three regimes: the power series while `x^{1/α} ≤ 3` (cancellation stays
//! below a factor e³), the asymptotic inverse-power series for `α ≤ 1/2`
//! once it converges to machine precision, and otherwise the real-line
//! integral representation
//! `E_α(−x) = (sin απ)/(απ) ∫₀^∞ exp(−t v^{1/α}) / (v² + 2v cos απ + 1) dv`,
//! `t = x^{1/α}`, folded onto `[0, 1]` with `v ↦ 1/v`.

use super::KernelError;
use crate::numerics::integrate;
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 3.0;

fn check_domain(alpha: f64, x: f64) -> Result<(), KernelError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(KernelError::DomainError(format!("Mittag-Leffler order must lie in (0, 1], got {alpha}")));
    }
    if !(x >= 0.0) || x.is_nan() {
        return Err(KernelError::DomainError(format!("Mittag-Leffler argument must be >= 0, got {x}")));
    }
    Ok(())
}

/// `1/Γ(z)` for any real `z`, zero at the poles.
pub(crate) fn rgamma(z: f64) -> f64 {
    if z <= 0.0 && z == z.floor() {
        return 0.0;
    }
    if z > 0.0 {
        if z < 170.0 {
            1.0 / gamma(z)
        } else {
            (-ln_gamma(z)).exp()
        }
    } else {
        // Reflection: 1/Γ(z) = Γ(1 − z) sin(πz)/π.
        let s = (PI * z).sin() / PI;
        let w = 1.0 - z;
        if w < 170.0 {
            gamma(w) * s
        } else {
            s.signum() * (ln_gamma(w) + s.abs().ln()).exp()
        }
    }
}

/// `Σ_k (−x)^k / Γ(αk + β)`.
fn series(alpha: f64, beta: f64, x: f64) -> f64 {
    let mut sum = rgamma(beta);
    let lx = x.ln();
    let mut passed_peak = false;
    let mut prev = f64::INFINITY;
    for k in 1..2000 {
        let arg = alpha * k as f64 + beta;
        let mag = if arg < 170.0 {
            x.powi(k) / gamma(arg)
        } else {
            (k as f64 * lx - ln_gamma(arg)).exp()
        };
        let term = if k % 2 == 1 { -mag } else { mag };
        sum += term;
        if mag < prev {
            passed_peak = true;
        }
        prev = mag;
        if passed_peak && mag <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `Σ_{k≥1} (−1)^{k+1} x^{−k} / Γ(β − αk)`, `None` unless it converges to
/// machine precision before the terms start to grow.
fn asymptotic(alpha: f64, beta: f64, x: f64) -> Option<f64> {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for k in 1..=80 {
        let c = rgamma(beta - alpha * k as f64);
        if c == 0.0 {
            continue;
        }
        let mag = x.powi(-k) * c.abs();
        let term = if k % 2 == 1 { c * x.powi(-k) } else { -c * x.powi(-k) };
        if mag > prev {
            return None;
        }
        sum += term;
        prev = mag;
        if sum != 0.0 && mag <= 1e-17 * sum.abs() {
            return Some(sum);
        }
    }
    None
}

fn integral(alpha: f64, beta_is_alpha: bool, x: f64) -> f64 {
    let t = x.powf(1.0 / alpha);
    let c = (alpha * PI).cos();
    let pre = (alpha * PI).sin() / (alpha * PI);
    let p = 1.0 / alpha;
    let f = |v: f64| -> f64 {
        let d = v * v + 2.0 * v * c + 1.0;
        let a = v.powf(p);
        let b = v.powf(-p);
        if beta_is_alpha {
            (a * (-t * a).exp() + b * (-t * b).exp()) / d
        } else {
            ((-t * a).exp() + (-t * b).exp()) / d
        }
    };
    let r = integrate(f, 0.0, 1.0, 1e-300, 1e-14);
    let val = pre * r.value;
    if beta_is_alpha {
        val * t.powf(1.0 - alpha)
    } else {
        val
    }
}

fn evaluate(alpha: f64, beta_is_alpha: bool, x: f64) -> f64 {
    let beta = if beta_is_alpha { alpha } else { 1.0 };
    if x == 0.0 {
        return rgamma(beta);
    }
    if alpha == 1.0 {
        return (-x).exp();
    }
    if x.powf(1.0 / alpha) <= SERIES_LIMIT {
        return series(alpha, beta, x);
    }
    if alpha <= 0.5 {
        if let Some(v) = asymptotic(alpha, beta, x) {
            return v;
        }
    }
    integral(alpha, beta_is_alpha, x)
}

/// `E_α(−x)`.
pub fn mittag_leffler(alpha: f64, x: f64) -> Result<f64, KernelError> {
    check_domain(alpha, x)?;
    Ok(evaluate(alpha, false, x))
}

/// `E_{α,α}(−x)`, the factor in the Mittag-Leffler waiting-time density
/// `w(t) = A t^{α−1} E_{α,α}(−A t^α)`.
pub fn mittag_leffler_aa(alpha: f64, x: f64) -> Result<f64, KernelError> {
    check_domain(alpha, x)?;
    Ok(evaluate(alpha, true, x))
}
