use super::ModelError;
use crate::linalg::{re, CMat, IM};
use crate::quantum::{GeneratorMatrix, Superoperator};
use num_complex::Complex64;

pub const FOCK_DIM_DEFAULT: usize = 32;
/// Largest tolerated population of the two highest Fock levels.
pub const LEAKAGE_LIMIT: f64 = 1e-6;

/// Truncated annihilation operator, `a|n⟩ = √n |n−1⟩`.
pub fn annihilation(dim: usize) -> CMat {
    CMat::from_fn(dim, dim, |i, j| if j == i + 1 { re((j as f64).sqrt()) } else { re(0.0) })
}

pub fn creation(dim: usize) -> CMat {
    annihilation(dim).adjoint()
}

pub fn number_operator(dim: usize) -> CMat {
    CMat::from_fn(dim, dim, |i, j| if i == j { re(i as f64) } else { re(0.0) })
}

/// Population in the two highest levels, the truncation leakage signal.
pub fn top_population(rho: &CMat) -> f64 {
    let d = rho.nrows();
    (d.saturating_sub(2)..d).map(|k| rho[(k, k)].re).sum()
}

/// Kramers-Moyal truncation of the displacement mixture `∫P(β) D(β)•D(β)† − I`:
///
/// `L[ρ] = [m a† − m* a, ρ] + S (D[a†] + D[a])ρ
///        − ½Q (2a†ρa† − a†²ρ − ρa†²) − ½Q* (2aρa − a²ρ − ρa²)`
///
/// with `m = ⟨β⟩`, `Q = ⟨β²⟩`, `S = ⟨|β|²⟩` and `D[c]ρ = cρc† − ½{c†c, ρ}`.
/// The moments are raw, not central.
pub fn second_order_generator(
    mean: Complex64,
    second: Complex64,
    abs2: f64,
    fock_dim: usize,
) -> Result<GeneratorMatrix, ModelError> {
    if fock_dim < 2 {
        return Err(ModelError::BadParameters(format!("Fock dimension must be at least 2, got {fock_dim}")));
    }
    if !(mean.re.is_finite() && mean.im.is_finite() && second.re.is_finite() && second.im.is_finite() && abs2.is_finite()) {
        return Err(ModelError::BadMoments("moments must be finite".into()));
    }
    let slack = 1e-12 * abs2.max(1.0);
    if abs2 < mean.norm_sqr() - slack {
        return Err(ModelError::BadMoments(format!("<|b|^2> = {abs2} is below |<b>|^2 = {}", mean.norm_sqr())));
    }
    if second.norm() > abs2 + slack {
        return Err(ModelError::BadMoments(format!("|<b^2>| = {} exceeds <|b|^2> = {abs2}", second.norm())));
    }
    let d = fock_dim;
    let a = annihilation(d);
    let ad = creation(d);
    let id = CMat::identity(d, d);
    let drift = &ad * mean - &a * mean.conj();
    let diffusion = GeneratorMatrix::lindblad(Some(&(&drift * IM)), &[(0.5 * abs2, ad.clone()), (0.5 * abs2, a.clone())])?;
    let squeeze = |c: &CMat, q: Complex64| -> CMat {
        let c2 = c * c;
        (Superoperator::sandwich(c, c).matrix() * re(2.0)
            - Superoperator::sandwich(&c2, &id).matrix()
            - Superoperator::sandwich(&id, &c2).matrix())
            * (q * -0.5)
    };
    let m = diffusion.matrix() + squeeze(&ad, second) + squeeze(&a, second.conj());
    Ok(GeneratorMatrix::from_matrix(m)?)
}
