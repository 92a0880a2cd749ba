use super::SolverError;
use crate::grid::TimeGrid;
use crate::kernels::{kernel_integral, rgamma, MemoryKernel};
use statrs::function::gamma::gamma;
use crate::linalg::{trace, unvectorize, vectorize, CMat, CVec, ONE};
use crate::quantum::{GeneratorMatrix, QuantumError};
use crate::states::StateTrajectory;
use num_complex::Complex64;

const TRACE_DRIFT_LIMIT: f64 = 1e-6;

/// Product-trapezoid weights for `ρ(t) = ρ0 + ∫₀ᵗ k₁(t−s) L[ρ(s)] ds`,
/// `k₁ = ∫K`. With `ρ` linear on each cell the weights follow from the
/// iterated integrals `k₂`, `k₃`:
/// `c_0 = k₃(h)/h`, `c_m = Δ²k₃(mh)/h`, `e_n = k₂(nh) − (k₃(nh) − k₃((n−1)h))/h`.
struct Weights {
    c: Vec<f64>,
    e: Vec<f64>,
}

/// `(m+1)^β − 2m^β + (m−1)^β` without cancellation for large `m`.
fn second_difference_pow(beta: f64, m: usize) -> f64 {
    let mf = m as f64;
    match m {
        0 => 1.0,
        1 => 2f64.powf(beta) - 2.0,
        _ => {
            let x = 1.0 / mf;
            mf.powf(beta) * ((beta * x.ln_1p()).exp_m1() + (beta * (-x).ln_1p()).exp_m1())
        }
    }
}

fn weights(kernel: &MemoryKernel, h: f64, n: usize) -> Result<Weights, SolverError> {
    let mut c = vec![0.0; n + 1];
    let mut e = vec![0.0; n + 1];
    match *kernel {
        MemoryKernel::Exponential { a_eps, gamma } => {
            let d = gamma * h;
            let scale = a_eps / (gamma * gamma * gamma * h);
            c[0] = kernel_integral(kernel, 3, h)? / h;
            let s2 = 4.0 * (0.5 * d).sinh().powi(2);
            for (m, cm) in c.iter_mut().enumerate().skip(1) {
                *cm = scale * (d * d - (-(m as f64) * d).exp() * s2);
            }
        }
        MemoryKernel::Fractional { a_alpha, alpha } => {
            let beta = 1.0 + alpha;
            let scale = a_alpha * h.powf(alpha) * rgamma(2.0 + alpha);
            for (m, cm) in c.iter_mut().enumerate() {
                *cm = scale * second_difference_pow(beta, m);
            }
        }
        _ => {
            let k3 = (0..=n + 1).map(|m| kernel_integral(kernel, 3, m as f64 * h)).collect::<Result<Vec<_>, _>>()?;
            c[0] = k3[1] / h;
            for m in 1..=n {
                c[m] = (k3[m + 1] - 2.0 * k3[m] + k3[m - 1]) / h;
            }
        }
    }
    for (k, ek) in e.iter_mut().enumerate().skip(1) {
        let t = k as f64 * h;
        *ek = kernel_integral(kernel, 2, t)? - (kernel_integral(kernel, 3, t)? - kernel_integral(kernel, 3, t - h)?) / h;
    }
    Ok(Weights { c, e })
}

/// Exponents the starting weights must integrate exactly: `0`, `1` and the
/// non-smooth powers `kα < 1` present in the solution.
fn starting_exponents(alpha: f64) -> Vec<f64> {
    let mut q = vec![0.0, 1.0];
    let mut k = 1.0;
    while alpha < 1.0 && k * alpha < 1.0 - 1e-9 {
        q.push(k * alpha);
        k += 1.0;
    }
    if q.len() == 2 {
        Vec::new()
    } else {
        q
    }
}

/// Lubich-type starting weights `W[n][j]`, `j < J`, added to the product
/// trapezoid so that `∫₀^{t_n} k₁(t_n − s) s^q ds` is exact for every
/// starting exponent. Without them the `t^α` start of the solution limits
/// the fractional scheme to `O(h^{2α})`.
fn starting_weights(q: &[f64], a_alpha: f64, alpha: f64, h: f64, w: &Weights) -> Result<Vec<Vec<f64>>, SolverError> {
    let j_count = q.len();
    let n = w.e.len() - 1;
    let vander = nalgebra::DMatrix::from_fn(j_count, j_count, |r, j| if j == 0 && q[r] == 0.0 { 1.0 } else { (j as f64).powf(q[r]) });
    let inv = vander
        .try_inverse()
        .ok_or_else(|| SolverError::Numerical("singular starting-weight system".into()))?;
    let powers: Vec<Vec<f64>> = q.iter().map(|&e| (0..=n).map(|j| (j as f64).powf(e)).collect()).collect();
    let mut out = vec![Vec::new(); n + 1];
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        let mut err = nalgebra::DVector::zeros(j_count);
        for (r, &e) in q.iter().enumerate() {
            if e == 0.0 || e == 1.0 {
                continue;
            }
            let exact = a_alpha * gamma(e + 1.0) * rgamma(alpha + e + 1.0) * h.powf(alpha) * (k as f64).powf(alpha + e);
            let quad: f64 = (1..=k).map(|j| w.c[k - j] * powers[r][j]).sum();
            err[r] = exact - quad;
        }
        *slot = (&inv * err).iter().copied().collect();
    }
    Ok(out)
}

fn check_inputs(l: &GeneratorMatrix, rho0: &CMat, grid: &TimeGrid) -> Result<f64, SolverError> {
    if rho0.nrows() != l.dim() || rho0.ncols() != l.dim() {
        return Err(QuantumError::DimMismatch { expected: l.dim(), found: rho0.nrows() }.into());
    }
    grid.uniform_step().ok_or(SolverError::NonUniformGrid)
}

fn finish(grid: &TimeGrid, vecs: Vec<CVec>, d: usize, tr0: Complex64) -> Result<StateTrajectory, SolverError> {
    let states: Vec<CMat> = vecs.iter().map(|v| unvectorize(v, d)).collect();
    let drift = states.iter().map(|s| (trace(s) - tr0).norm()).fold(0.0, f64::max);
    if !(drift <= TRACE_DRIFT_LIMIT) {
        return Err(SolverError::UnstableStep { drift });
    }
    Ok(StateTrajectory { grid: grid.points().to_vec(), states })
}

/// Time-steps the master equation on a uniform grid from `t = 0`.
///
/// Markovian kernels step with the exact propagator `exp(A₁hL)`. Other
/// kernels use product-trapezoid quadrature of the integrated equation;
/// for the fractional kernel this is product integration of the
/// Riemann–Liouville form `ρ = ρ0 + A_α I^α L[ρ]`.
pub fn volterra_solve(
    l: &GeneratorMatrix,
    kernel: &MemoryKernel,
    rho0: &CMat,
    grid: &TimeGrid,
) -> Result<StateTrajectory, SolverError> {
    kernel.validate()?;
    let h = check_inputs(l, rho0, grid)?;
    let d = l.dim();
    let n = grid.len() - 1;
    let x0 = vectorize(rho0);
    let tr0 = trace(rho0);
    let lm = l.matrix();
    let mut xs = Vec::with_capacity(n + 1);
    xs.push(x0.clone());
    if let MemoryKernel::Markovian { a1 } = *kernel {
        let step = l.propagator(a1 * h);
        for k in 0..n {
            let next = step.matrix() * &xs[k];
            xs.push(next);
        }
        return finish(grid, xs, d, tr0);
    }
    if n == 0 {
        return finish(grid, xs, d, tr0);
    }
    let start = match *kernel {
        MemoryKernel::Fractional { alpha, .. } => starting_exponents(alpha),
        _ => Vec::new(),
    };
    // The first `J − 1` steps are coupled through the starting weights.
    let coupled = start.len().saturating_sub(1);
    let steps = n.max(coupled);
    let w = weights(kernel, h, steps)?;
    let corr = match *kernel {
        MemoryKernel::Fractional { a_alpha, alpha } if !start.is_empty() => starting_weights(&start, a_alpha, alpha, h, &w)?,
        _ => vec![Vec::new(); steps + 1],
    };
    let size = d * d;
    let weight = |k: usize, j: usize| -> f64 {
        let base = if j == 0 {
            w.e[k]
        } else if j <= k {
            w.c[k - j]
        } else {
            0.0
        };
        base + corr[k].get(j).copied().unwrap_or(0.0)
    };
    let lx0 = lm * &x0;
    if coupled > 0 {
        let dim = coupled * size;
        let mut block = CMat::identity(dim, dim);
        let mut rhs = CVec::zeros(dim);
        for k in 1..=coupled {
            let r = (k - 1) * size;
            rhs.rows_mut(r, size).copy_from(&(&x0 + &lx0 * Complex64::new(weight(k, 0), 0.0)));
            for j in 1..=coupled {
                let c = (j - 1) * size;
                let mut sub = block.view_mut((r, c), (size, size));
                sub -= lm * Complex64::new(weight(k, j), 0.0);
            }
        }
        let sol = block
            .lu()
            .solve(&rhs)
            .ok_or_else(|| SolverError::Numerical("starting block is singular".into()))?;
        for k in 0..coupled {
            xs.push(sol.rows(k * size, size).into_owned());
        }
    }
    let system = CMat::identity(size, size) - lm * Complex64::new(weight(coupled + 1, coupled + 1), 0.0);
    let lu = system.lu();
    for k in coupled + 1..=n {
        let mut hist = &x0 * Complex64::new(weight(k, 0), 0.0);
        for j in 1..k {
            hist.axpy(Complex64::new(weight(k, j), 0.0), &xs[j], ONE);
        }
        let rhs = &x0 + lm * hist;
        let next = lu
            .solve(&rhs)
            .ok_or_else(|| SolverError::Numerical(format!("implicit step matrix is singular at step {k}")))?;
        xs.push(next);
    }
    xs.truncate(n + 1);
    finish(grid, xs, d, tr0)
}

/// Telegraph route for the exponential kernel: `ρ'' + γρ' = A_ε L[ρ]`
/// with `ρ(0) = ρ0`, `ρ'(0) = 0`, integrated exactly as a first-order
/// block system.
pub fn telegraph_ode_solve(
    l: &GeneratorMatrix,
    gamma: f64,
    a_eps: f64,
    rho0: &CMat,
    grid: &TimeGrid,
) -> Result<StateTrajectory, SolverError> {
    MemoryKernel::exponential(a_eps, gamma)?;
    if rho0.nrows() != l.dim() || rho0.ncols() != l.dim() {
        return Err(QuantumError::DimMismatch { expected: l.dim(), found: rho0.nrows() }.into());
    }
    let d = l.dim();
    let size = d * d;
    let mut block = CMat::zeros(2 * size, 2 * size);
    block.view_mut((0, size), (size, size)).copy_from(&CMat::identity(size, size));
    block.view_mut((size, 0), (size, size)).copy_from(&(l.matrix() * Complex64::new(a_eps, 0.0)));
    block
        .view_mut((size, size), (size, size))
        .copy_from(&(CMat::identity(size, size) * Complex64::new(-gamma, 0.0)));
    let mut y = CVec::zeros(2 * size);
    y.rows_mut(0, size).copy_from(&vectorize(rho0));
    let mut xs = Vec::with_capacity(grid.len());
    let mut t_prev = 0.0;
    let mut cached: Option<(f64, CMat)> = None;
    for &t in grid.points() {
        let dt = t - t_prev;
        if dt > 0.0 {
            let reuse = matches!(&cached, Some((h, _)) if (h - dt).abs() <= 1e-14 * dt);
            if !reuse {
                cached = Some((dt, crate::linalg::expm(&(&block * Complex64::new(dt, 0.0)))));
            }
            y = &cached.as_ref().expect("set above").1 * &y;
        }
        xs.push(y.rows(0, size).into_owned());
        t_prev = t;
    }
    finish(grid, xs, d, trace(rho0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, pauli_x, pauli_y, pauli_z};
    use crate::quantum::{damping_basis, lindblad_from_kraus, DensityMatrix, KrausMap};
    use crate::solvers::closed_form_solve;

    fn depolarizing_generator() -> GeneratorMatrix {
        let s = Complex64::new(0.5f64.sqrt(), 0.0);
        lindblad_from_kraus(&KrausMap::new(vec![pauli_x() * s, pauli_y() * s]).unwrap()).unwrap()
    }

    fn rho0() -> CMat {
        DensityMatrix::from_bloch([0.6, 0.0, 0.8]).unwrap().into_matrix()
    }

    #[test]
    fn stable_second_difference() {
        for &beta in &[1.3, 1.5, 1.9] {
            for &m in &[2usize, 5, 100] {
                let mf = m as f64;
                let direct = (mf + 1.0).powf(beta) - 2.0 * mf.powf(beta) + (mf - 1.0).powf(beta);
                assert!((second_difference_pow(beta, m) - direct).abs() < 1e-12 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn markovian_is_exact() {
        let l = depolarizing_generator();
        let k = MemoryKernel::markovian(0.5).unwrap();
        let grid = TimeGrid::uniform(10.0, 101).unwrap();
        let sol = volterra_solve(&l, &k, &rho0(), &grid).unwrap();
        for (t, s) in grid.points().iter().zip(&sol.states) {
            let exact = crate::linalg::unvectorize(&(l.propagator(0.5 * t).matrix() * vectorize(&rho0())), 2);
            assert!(max_abs_diff(s, &exact) < 1e-12);
        }
    }

    #[test]
    fn exponential_kernel_converges_at_second_order() {
        let l = depolarizing_generator();
        let basis = damping_basis(&l, None).unwrap();
        let k = MemoryKernel::exponential(0.75, 2.0).unwrap();
        let err = |n: usize| {
            let grid = TimeGrid::uniform(8.0, n + 1).unwrap();
            let v = volterra_solve(&l, &k, &rho0(), &grid).unwrap();
            let c = closed_form_solve(&basis, &k, &rho0(), &grid).unwrap();
            v.max_deviation(&c)
        };
        let (e1, e2) = (err(100), err(200));
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "observed order {order}");
    }

    #[test]
    fn fractional_kernel_with_starting_weights() {
        let l = depolarizing_generator();
        let basis = damping_basis(&l, None).unwrap();
        for &(alpha, tol) in &[(0.5, 2e-5), (0.3, 2e-4), (0.8, 2e-5)] {
            let k = MemoryKernel::fractional(0.7, alpha).unwrap();
            let grid = TimeGrid::uniform(5.0, 401).unwrap();
            let v = volterra_solve(&l, &k, &rho0(), &grid).unwrap();
            let c = closed_form_solve(&basis, &k, &rho0(), &grid).unwrap();
            let err = v.max_deviation(&c);
            assert!(err < tol, "alpha={alpha}: {err:e}");
        }
    }

    #[test]
    fn telegraph_ode_matches_closed_form() {
        let l = depolarizing_generator();
        let basis = damping_basis(&l, None).unwrap();
        for &(gamma, a) in &[(2.0, 0.75), (0.5, 0.25), (2.0, 1.0)] {
            let k = MemoryKernel::exponential(a, gamma).unwrap();
            let grid = TimeGrid::uniform(20.0, 81).unwrap();
            let ode = telegraph_ode_solve(&l, gamma, a, &rho0(), &grid).unwrap();
            let c = closed_form_solve(&basis, &k, &rho0(), &grid).unwrap();
            assert!(ode.max_deviation(&c) < 1e-12);
        }
    }

    #[test]
    fn custom_kernel_matches_builtin() {
        let l = depolarizing_generator();
        let k = MemoryKernel::exponential(0.75, 2.0).unwrap();
        let custom = MemoryKernel::custom("exp", 0.375, |u| 0.75 / (u + 2.0)).unwrap();
        let grid = TimeGrid::uniform(4.0, 81).unwrap();
        let a = volterra_solve(&l, &k, &rho0(), &grid).unwrap();
        let b = volterra_solve(&l, &custom, &rho0(), &grid).unwrap();
        assert!(a.max_deviation(&b) < 1e-8);
    }

    #[test]
    fn rejects_non_uniform_grid() {
        let l = depolarizing_generator();
        let k = MemoryKernel::exponential(0.75, 2.0).unwrap();
        let grid = TimeGrid::new(vec![0.0, 0.1, 0.3]).unwrap();
        assert_eq!(volterra_solve(&l, &k, &pauli_z(), &grid), Err(SolverError::NonUniformGrid));
    }
}
