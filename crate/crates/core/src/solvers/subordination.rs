use super::{relaxation, SolverError};
use crate::grid::TimeGrid;
use crate::kernels::{classify_kernel, kernel_integral, Certificate, MemoryKernel, Verdict};
use crate::linalg::CMat;
use crate::numerics::{integrate_with_breaks, talbot_invert, TALBOT_NODES};
use crate::quantum::{DampingBasis, QuantumError};
use crate::states::StateTrajectory;
use num_complex::Complex64;

/// Weight cut-off for the τ integral: `e^{−λ_min τ_max} = 1e-10`.
const TAU_WEIGHT_CUTOFF: f64 = 1e-10;

/// `P(t, τ)`, the density of internal (Markovian) time `τ` at physical time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubordinationDensity {
    Density(f64),
    /// Markovian kernels: all mass at `τ = A₁t`.
    Delta { location: f64 },
}

/// Whether `kernel` admits an ordinary subordination density.
fn density_check(kernel: &MemoryKernel) -> Result<(), SolverError> {
    let v = classify_kernel(kernel)?;
    match (&v.verdict, &v.certificate, kernel) {
        (Verdict::Dangerous, c, _) => Err(SolverError::DangerousKernel(c.to_string())),
        (_, _, MemoryKernel::Exponential { .. }) => Err(SolverError::NoSubordinationDensity(
            "u/K~(u) = u(u + gamma)/A_eps is not a Bernstein function; use the Laplace route".into(),
        )),
        (_, Certificate::FailedMonotonicity { .. }, _) => Err(SolverError::NoSubordinationDensity(v.certificate.to_string())),
        _ => Ok(()),
    }
}

fn density_value(kernel: &MemoryKernel, t: f64, tau: f64) -> f64 {
    talbot_invert(
        |u| {
            let k = kernel.laplace(u);
            (-tau * u / k).exp() / k
        },
        t,
        TALBOT_NODES,
    )
}

/// Inverts `P̃(u, τ) = e^{−τu/K̃(u)}/K̃(u)` in `u` at time `t`.
pub fn subordination_pdf(kernel: &MemoryKernel, t: f64, tau: f64) -> Result<SubordinationDensity, SolverError> {
    kernel.validate()?;
    if !(t > 0.0 && t.is_finite() && tau >= 0.0 && tau.is_finite()) {
        return Err(SolverError::Numerical(format!("need t > 0 and tau >= 0, got t={t}, tau={tau}")));
    }
    if let MemoryKernel::Markovian { a1 } = *kernel {
        return Ok(SubordinationDensity::Delta { location: a1 * t });
    }
    density_check(kernel)?;
    Ok(SubordinationDensity::Density(density_value(kernel, t, tau)))
}

/// `∫₀^{τ_max} P(t,τ) e^{−λτ} dτ`, breakpoints scaled by the mean `k₂(t)`.
fn subordinated_decay(kernel: &MemoryKernel, t: f64, lambda: Complex64, tau_max: f64) -> Result<Complex64, SolverError> {
    let mean = kernel_integral(kernel, 2, t)?;
    let mut breaks = vec![0.0];
    for f in [0.125, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        let b = f * mean;
        if b < tau_max && b > *breaks.last().expect("seeded") {
            breaks.push(b);
        }
    }
    breaks.push(tau_max);
    let r = integrate_with_breaks(
        |tau: f64| (-lambda * tau).exp() * density_value(kernel, t, tau),
        &breaks,
        1e-12,
        1e-10,
    );
    if !(r.value.re.is_finite() && r.value.im.is_finite()) || r.error > 1e-7 {
        return Err(SolverError::Numerical(format!(
            "subordination integral at t={t} did not converge (error estimate {:e})",
            r.error
        )));
    }
    Ok(r.value)
}

/// `ρ(t) = ∫₀^∞ P(t,τ) e^{τL}[ρ0] dτ`, mode by mode in the damping basis.
///
/// Fractional and custom kernels with a density integrate `P(t,τ)` over
/// `τ` up to where `e^{−λ_min τ} < 1e-10`; the `λ = 0` part is exact by
/// normalization. Markovian kernels use the delta line. Safe exponential
/// kernels have no density; there `∫P e^{−λτ} dτ` is inverted directly
/// from its transform `1/(u + λK̃(u))`.
pub fn subordination_solve(
    kernel: &MemoryKernel,
    basis: &DampingBasis,
    rho0: &CMat,
    grid: &TimeGrid,
) -> Result<StateTrajectory, SolverError> {
    kernel.validate()?;
    if rho0.nrows() != basis.dim || rho0.ncols() != basis.dim {
        return Err(QuantumError::DimMismatch { expected: basis.dim, found: rho0.nrows() }.into());
    }
    let quadrature = match kernel {
        MemoryKernel::Markovian { .. } => false,
        MemoryKernel::Exponential { .. } => {
            let v = classify_kernel(kernel)?;
            if v.verdict == Verdict::Dangerous {
                return Err(SolverError::DangerousKernel(v.certificate.to_string()));
            }
            false
        }
        _ => {
            density_check(kernel)?;
            true
        }
    };
    let coefficients = basis.coefficients_for(rho0);
    let zero = Complex64::new(0.0, 0.0);
    let tau_max = if quadrature {
        let slowest = basis.slowest_decay().unwrap_or(1.0);
        if !(slowest > 0.0) {
            return Err(SolverError::Numerical(format!("non-decaying mode (rate {slowest}) defeats tau truncation")));
        }
        -TAU_WEIGHT_CUTOFF.ln() / slowest
    } else {
        0.0
    };
    let mut states = Vec::with_capacity(grid.len());
    for &t in grid.points() {
        let mut out = CMat::zeros(basis.dim, basis.dim);
        for (m, c) in basis.modes.iter().zip(&coefficients) {
            if c.norm() == 0.0 {
                continue;
            }
            let h = if m.decay == zero || t == 0.0 {
                Complex64::new(1.0, 0.0)
            } else if quadrature {
                subordinated_decay(kernel, t, m.decay, tau_max)?
            } else {
                relaxation(kernel, m.decay, t)?
            };
            out += &m.right * (c * h);
        }
        states.push(out);
    }
    Ok(StateTrajectory { grid: grid.points().to_vec(), states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::mittag_leffler;
    use crate::numerics::integrate;

    #[test]
    fn fractional_density_is_normalized() {
        let k = MemoryKernel::fractional(0.5f64.sqrt(), 0.5).unwrap();
        for &t in &[0.1, 1.0, 5.0, 20.0] {
            let mass = integrate(|tau: f64| density_value(&k, t, tau), 0.0, 200.0, 1e-13, 1e-12).value;
            assert!((mass - 1.0).abs() < 1e-6, "t={t}: {mass}");
        }
    }

    #[test]
    fn half_order_density_is_gaussian() {
        // α = 1/2: P(t,τ) = (1/(A√(πt))) exp(−τ²/(4A²t)).
        let a = 0.8;
        let k = MemoryKernel::fractional(a, 0.5).unwrap();
        for &(t, tau) in &[(1.0, 0.3), (2.0, 1.0), (0.5, 0.05)] {
            let want = (-(tau * tau) / (4.0 * a * a * t)).exp() / (a * (std::f64::consts::PI * t).sqrt());
            let SubordinationDensity::Density(p) = subordination_pdf(&k, t, tau).unwrap() else { panic!() };
            assert!((p - want).abs() < 1e-10, "{p} vs {want}");
        }
    }

    #[test]
    fn laplace_weighting_reproduces_mittag_leffler() {
        let a = 0.5f64.sqrt();
        let k = MemoryKernel::fractional(a, 0.5).unwrap();
        for &t in &[0.5, 3.0, 15.0] {
            for &lam in &[1.0, 2.0] {
                let h = subordinated_decay(&k, t, Complex64::new(lam, 0.0), -TAU_WEIGHT_CUTOFF.ln() / lam).unwrap();
                let want = mittag_leffler(0.5, lam * a * t.sqrt()).unwrap();
                assert!((h.re - want).abs() < 1e-5 && h.im.abs() < 1e-12, "t={t} lam={lam}: {h} vs {want}");
            }
        }
    }

    #[test]
    fn refusals() {
        let dangerous = MemoryKernel::exponential(0.25, 0.5).unwrap();
        assert!(matches!(subordination_pdf(&dangerous, 1.0, 1.0), Err(SolverError::DangerousKernel(_))));
        let safe = MemoryKernel::exponential(0.75, 2.0).unwrap();
        assert!(matches!(subordination_pdf(&safe, 1.0, 1.0), Err(SolverError::NoSubordinationDensity(_))));
        let m = MemoryKernel::markovian(0.5).unwrap();
        assert_eq!(subordination_pdf(&m, 4.0, 1.0).unwrap(), SubordinationDensity::Delta { location: 2.0 });
    }
}
