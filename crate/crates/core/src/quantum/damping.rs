use super::{GeneratorMatrix, QuantumError};
use crate::linalg::{condition_number, max_abs, re, trace, unvectorize, vectorize, CMat, CVec};
use num_complex::Complex64;

const GROUP_TOL: f64 = 1e-9;
const MAX_CONDITION: f64 = 1e12;

/// One relaxation mode: `L[P] = −λP`, `Tr[P̌ P] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingMode {
    /// Decay rate `λ`; the mode evolves as `e^{−λτ}` under `exp(τL)`.
    pub decay: Complex64,
    pub right: CMat,
    pub dual: CMat,
}

/// Biorthogonal eigen-decomposition of a generator.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingBasis {
    pub dim: usize,
    pub modes: Vec<DampingMode>,
    /// `č_λ = Tr[P̌_λ ρ0]` when an initial state was supplied.
    pub coefficients: Option<Vec<Complex64>>,
}

impl DampingBasis {
    pub fn coefficients_for(&self, rho0: &CMat) -> Vec<Complex64> {
        self.modes.iter().map(|m| trace(&(&m.dual * rho0))).collect()
    }

    /// `Σ c_k P_k`.
    pub fn reconstruct(&self, coefficients: &[Complex64]) -> CMat {
        self.evolve(coefficients, |_| re(1.0))
    }

    /// `Σ c_k h(λ_k) P_k`.
    pub fn evolve<F: Fn(Complex64) -> Complex64>(&self, coefficients: &[Complex64], h: F) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (m, c) in self.modes.iter().zip(coefficients) {
            if *c != re(0.0) {
                out += &m.right * (c * h(m.decay));
            }
        }
        out
    }

    pub fn decay_rates(&self) -> Vec<Complex64> {
        self.modes.iter().map(|m| m.decay).collect()
    }

    /// Long-time limit `Σ_{λ=0} č P` of the given initial operator.
    pub fn stationary_projection(&self, rho0: &CMat) -> CMat {
        let c = self.coefficients_for(rho0);
        self.evolve(&c, |l| if l == re(0.0) { re(1.0) } else { re(0.0) })
    }

    /// The unique stationary state, if the zero eigenvalue is simple.
    pub fn stationary_state(&self) -> Option<CMat> {
        let zeros: Vec<&DampingMode> = self.modes.iter().filter(|m| m.decay == re(0.0)).collect();
        if zeros.len() != 1 {
            return None;
        }
        let p = &zeros[0].right;
        let tr = trace(p);
        (tr.norm() > 1e-12).then(|| p / tr)
    }

    /// Smallest non-zero real part of the decay rates.
    pub fn slowest_decay(&self) -> Option<f64> {
        self.modes
            .iter()
            .filter(|m| m.decay != re(0.0))
            .map(|m| m.decay.re)
            .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))))
    }
}

fn null_space(a: &CMat, count: usize, tol: f64) -> Result<CMat, QuantumError> {
    let n = a.nrows();
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    if svd.singular_values[idx[count - 1]] > tol {
        return Err(QuantumError::Defective(f64::INFINITY));
    }
    let mut out = CMat::zeros(n, count);
    for (col, &k) in idx.iter().take(count).enumerate() {
        out.set_column(col, &v_t.row(k).adjoint());
    }
    Ok(out)
}

/// Eigen-decomposition `L[P_λ] = −λ P_λ` with duals normalized to
/// `Tr[P̌_λ P_λ'] = δ`. Degenerate eigenvalues (within 1e-9) share a
/// biorthogonalized eigenspace.
pub fn damping_basis(gen: &GeneratorMatrix, rho0: Option<&CMat>) -> Result<DampingBasis, QuantumError> {
    let d = gen.dim();
    let n = d * d;
    let g = gen.matrix();
    let scale = max_abs(g).max(1.0);
    let (_, t) = g.clone().schur().unpack();
    let eig: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();

    // Cluster eigenvalues.
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for ev in eig {
        match groups
            .iter_mut()
            .find(|grp| (grp.iter().sum::<Complex64>() / grp.len() as f64 - ev).norm() < GROUP_TOL * scale)
        {
            Some(grp) => grp.push(ev),
            None => groups.push(vec![ev]),
        }
    }
    let mut centers: Vec<(Complex64, usize)> = groups
        .iter()
        .map(|grp| {
            let mut mu = grp.iter().sum::<Complex64>() / grp.len() as f64;
            if mu.norm() < 1e-10 * scale {
                mu = re(0.0);
            }
            (mu, grp.len())
        })
        .collect();
    // Ascending decay rate, then imaginary part, for a stable order.
    centers.sort_by(|a, b| (-a.0.re).total_cmp(&-b.0.re).then(a.0.im.total_cmp(&b.0.im)));

    let null_tol = 1e-7 * scale;
    let mut rights = CMat::zeros(n, n);
    let mut modes = Vec::with_capacity(n);
    let mut col = 0;
    for (mu, mult) in centers {
        let a = g - CMat::identity(n, n) * mu;
        let v = null_space(&a, mult, null_tol)?;
        let w = null_space(&a.adjoint(), mult, null_tol)?;
        let m = w.adjoint() * &v;
        let minv = m.try_inverse().ok_or(QuantumError::Defective(f64::INFINITY))?;
        let w = w * minv.adjoint();
        for k in 0..mult {
            let vk: CVec = v.column(k).into_owned();
            let wk: CVec = w.column(k).into_owned();
            let mut right = unvectorize(&vk, d);
            let mut dual = unvectorize(&wk.conjugate(), d).transpose();
            // Unit trace when possible, otherwise a unit-norm phase convention.
            let tr = trace(&right);
            let s = if tr.norm() > 1e-8 {
                tr
            } else {
                let big = right
                    .iter()
                    .copied()
                    .max_by(|x, y| x.norm().total_cmp(&y.norm()))
                    .expect("non-empty");
                big / big.norm() * right.norm()
            };
            right /= s;
            dual *= s;
            rights.set_column(col, &vectorize(&right));
            col += 1;
            modes.push(DampingMode { decay: -mu, right, dual });
        }
    }
    let cond = condition_number(&rights);
    if !(cond <= MAX_CONDITION) {
        return Err(QuantumError::Defective(cond));
    }
    let mut basis = DampingBasis { dim: d, modes, coefficients: None };
    if let Some(r) = rho0 {
        if r.nrows() != d || r.ncols() != d {
            return Err(QuantumError::DimMismatch { expected: d, found: r.nrows() });
        }
        basis.coefficients = Some(basis.coefficients_for(r));
    }
    Ok(basis)
}
