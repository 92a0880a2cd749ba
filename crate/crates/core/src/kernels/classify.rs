use super::{KernelError, MemoryKernel};
use crate::numerics::{talbot_invert, TALBOT_NODES};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;

const CM_ORDER: usize = 8;
const CAUCHY_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Safe,
    Dangerous,
    SafeConditional { condition: String },
}

/// Evidence behind a verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// The waiting-time density is known in closed form.
    ClosedFormWaiting(String),
    /// `w(t) < 0`. `scaled_pdf` is `e^{γt/2} w(t)` for the telegraph kernel
    /// (raw values underflow near the boundary) and `w(t)` otherwise.
    NegativeWaiting { t: f64, scaled_pdf: f64, log_abs_pdf: f64 },
    /// A sign condition on the `order`-th derivative failed at `u`.
    FailedMonotonicity { function: &'static str, order: usize, u: f64 },
    /// Finite numeric checks passed.
    NumericPass { max_order: usize },
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ClosedFormWaiting(s) => write!(f, "closed-form waiting time: {s}"),
            Self::NegativeWaiting { t, scaled_pdf, log_abs_pdf } => write!(
                f,
                "w(t) < 0 at t = {t:.6e} (scaled value {scaled_pdf:.6e}, ln|w| = {log_abs_pdf:.6})"
            ),
            Self::FailedMonotonicity { function, order, u } => {
                write!(f, "derivative of order {order} of {function} has the wrong sign at u = {u:.6e}")
            }
            Self::NumericPass { max_order } => {
                write!(f, "sign-alternation checks passed up to order {max_order} on the sampled grid")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelVerdict {
    pub verdict: Verdict,
    pub certificate: Certificate,
}

/// Taylor coefficients times `n!`: derivatives `f^{(n)}(u)`, `n ≤ order`,
/// from the Cauchy integral on a circle of radius `u/2`, plus the largest
/// modulus seen on the circle.
fn cauchy_derivatives<F: Fn(Complex64) -> Complex64>(f: &F, u: f64, order: usize) -> (Vec<f64>, f64) {
    let r = 0.5 * u;
    let samples: Vec<(Complex64, f64)> = (0..CAUCHY_NODES)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / CAUCHY_NODES as f64;
            (f(Complex64::new(u, 0.0) + Complex64::from_polar(r, th)), th)
        })
        .collect();
    let max = samples.iter().map(|(v, _)| v.norm()).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(order + 1);
    let mut fact = 1.0;
    for n in 0..=order {
        if n > 0 {
            fact *= n as f64;
        }
        let s: Complex64 = samples
            .iter()
            .map(|(v, th)| v * Complex64::from_polar(1.0, -(n as f64) * th))
            .sum();
        out.push((s / CAUCHY_NODES as f64).re * fact / r.powi(n as i32));
    }
    (out, max)
}

fn tolerance(n: usize, max: f64, u: f64) -> f64 {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    1e-9 * fact * max / (0.5 * u).powi(n as i32)
}

fn classify_custom(k: &MemoryKernel, scale: f64) -> Result<KernelVerdict, KernelError> {
    let grid: Vec<f64> = (0..=60).map(|j| scale * 10f64.powf(-3.0 + 6.0 * j as f64 / 60.0)).collect();
    let wt = |z: Complex64| {
        let kz = k.laplace(z);
        kz / (z + kz)
    };
    let g = |z: Complex64| z / k.laplace(z);

    // Complete monotonicity of w̃.
    for &u in &grid {
        let (d, max) = cauchy_derivatives(&wt, u, CM_ORDER);
        if !max.is_finite() {
            return Err(KernelError::CustomFailure(format!("K~ not finite near u = {u}")));
        }
        for (n, v) in d.iter().enumerate() {
            let signed = if n % 2 == 0 { *v } else { -v };
            if signed < -tolerance(n, max, u) {
                return Ok(KernelVerdict {
                    verdict: Verdict::Dangerous,
                    certificate: Certificate::FailedMonotonicity { function: "w~(u)", order: n, u },
                });
            }
        }
    }

    // Direct negativity of the inverted density.
    let mut peak = 0.0_f64;
    let mut worst: Option<(f64, f64)> = None;
    for j in 0..=40 {
        let t = 10f64.powf(-2.0 + 4.0 * j as f64 / 40.0) / scale;
        let w = talbot_invert(wt, t, TALBOT_NODES);
        peak = peak.max(w.abs());
        if worst.is_none_or(|(_, wv)| w < wv) {
            worst = Some((t, w));
        }
    }
    if let Some((t, w)) = worst {
        if w < -1e-8 * peak {
            return Ok(KernelVerdict {
                verdict: Verdict::Dangerous,
                certificate: Certificate::NegativeWaiting { t, scaled_pdf: w, log_abs_pdf: w.abs().ln() },
            });
        }
    }

    // Sufficient condition for a subordination density: u/K̃ ≥ 0 with a
    // completely monotone derivative.
    for &u in &grid {
        let (d, max) = cauchy_derivatives(&g, u, CM_ORDER);
        if d[0] < -tolerance(0, max, u) {
            return Ok(KernelVerdict {
                verdict: Verdict::SafeConditional {
                    condition: format!("u/K~(u) is negative at u = {u:.3e}; no subordination density"),
                },
                certificate: Certificate::FailedMonotonicity { function: "u/K~(u)", order: 0, u },
            });
        }
        for n in 0..CM_ORDER {
            let v = d[n + 1];
            let signed = if n % 2 == 0 { v } else { -v };
            if signed < -tolerance(n + 1, max, u) {
                return Ok(KernelVerdict {
                    verdict: Verdict::SafeConditional {
                        condition: format!(
                            "waiting time passes the numeric tests but d[u/K~]/du fails complete monotonicity at order {n}; no subordination density"
                        ),
                    },
                    certificate: Certificate::FailedMonotonicity { function: "d[u/K~(u)]/du", order: n, u },
                });
            }
        }
    }
    Ok(KernelVerdict {
        verdict: Verdict::SafeConditional {
            condition: format!(
                "complete monotonicity verified numerically up to order {CM_ORDER} on u in [1e-3, 1e3] x {scale}"
            ),
        },
        certificate: Certificate::NumericPass { max_order: CM_ORDER },
    })
}

/// Safe when the kernel induces a genuine waiting-time density.
///
/// The telegraph kernel `A_ε e^{−γt}` is safe iff `γ² ≥ 4A_ε`; at equality
/// the waiting time is the Erlang-2 law. Its dangerous witness sits at
/// `t = 3π/ω`, `ω = √(4A_ε − γ²)`, where `sin(ωt/2) = −1`.
pub fn classify_kernel(k: &MemoryKernel) -> Result<KernelVerdict, KernelError> {
    k.validate()?;
    Ok(match k {
        MemoryKernel::Markovian { a1 } => KernelVerdict {
            verdict: Verdict::Safe,
            certificate: Certificate::ClosedFormWaiting(format!("exponential, rate {a1}")),
        },
        MemoryKernel::Fractional { a_alpha, alpha } => KernelVerdict {
            verdict: Verdict::Safe,
            certificate: Certificate::ClosedFormWaiting(format!(
                "Mittag-Leffler, survival E_{alpha}(-{a_alpha} t^{alpha})"
            )),
        },
        MemoryKernel::Exponential { a_eps, gamma } => {
            let disc = gamma * gamma - 4.0 * a_eps;
            if disc >= 0.0 {
                let r2 = 0.5 * (gamma + disc.sqrt());
                KernelVerdict {
                    verdict: Verdict::Safe,
                    certificate: Certificate::ClosedFormWaiting(format!(
                        "hypoexponential, rates {} and {r2}",
                        a_eps / r2
                    )),
                }
            } else {
                let omega = (-disc).sqrt();
                let t = 3.0 * PI / omega;
                KernelVerdict {
                    verdict: Verdict::Dangerous,
                    certificate: Certificate::NegativeWaiting {
                        t,
                        scaled_pdf: -2.0 * a_eps / omega,
                        log_abs_pdf: (2.0 * a_eps / omega).ln() - 0.5 * gamma * t,
                    },
                }
            }
        }
        MemoryKernel::CustomLaplace(c) => classify_custom(k, c.scale)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_verdicts() {
        let f = MemoryKernel::fractional(0.5f64.sqrt(), 0.5).unwrap();
        assert_eq!(classify_kernel(&f).unwrap().verdict, Verdict::Safe);
        let d = MemoryKernel::exponential(0.25, 0.5).unwrap();
        assert_eq!(classify_kernel(&d).unwrap().verdict, Verdict::Dangerous);
        let s = MemoryKernel::exponential(0.75, 2.0).unwrap();
        assert_eq!(classify_kernel(&s).unwrap().verdict, Verdict::Safe);
        assert_eq!(classify_kernel(&MemoryKernel::markovian(1.0).unwrap()).unwrap().verdict, Verdict::Safe);
    }

    #[test]
    fn custom_verdicts() {
        let frac = MemoryKernel::custom("frac", 1.0, |u| u.powf(0.5)).unwrap();
        let v = classify_kernel(&frac).unwrap();
        assert!(matches!(v.verdict, Verdict::SafeConditional { .. }), "{v:?}");
        assert_eq!(v.certificate, Certificate::NumericPass { max_order: 8 });

        let bad = MemoryKernel::custom("telegraph", 0.5, |u| 0.25 / (u + 0.5)).unwrap();
        let v = classify_kernel(&bad).unwrap();
        assert_eq!(v.verdict, Verdict::Dangerous);
        assert!(matches!(v.certificate, Certificate::FailedMonotonicity { function: "w~(u)", .. }), "{v:?}");

        // Safe telegraph: waiting time fine, but no subordination density.
        let tel = MemoryKernel::custom("telegraph", 0.375, |u| 0.75 / (u + 2.0)).unwrap();
        let v = classify_kernel(&tel).unwrap();
        assert!(matches!(v.verdict, Verdict::SafeConditional { .. }), "{v:?}");
        assert!(matches!(v.certificate, Certificate::FailedMonotonicity { function: "d[u/K~(u)]/du", .. }), "{v:?}");
    }
}
