use super::density::check_square;
use super::{QuantumError, TOL_CLOSURE};
use crate::linalg::{max_abs_diff, CMat};
use crate::quantum::Superoperator;

/// Kraus representation `E[ρ] = Σ C_i ρ C_i†` with `Σ C_i† C_i = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausMap {
    dim: usize,
    ops: Vec<CMat>,
}

impl KrausMap {
    pub fn new(ops: Vec<CMat>) -> Result<Self, QuantumError> {
        let first = ops.first().ok_or(QuantumError::Empty)?;
        let dim = check_square(first)?;
        for op in &ops {
            let d = check_square(op)?;
            if d != dim {
                return Err(QuantumError::DimMismatch { expected: dim, found: d });
            }
        }
        let defect = closure_defect(&ops);
        if defect > TOL_CLOSURE {
            return Err(QuantumError::ClosureDefect(defect));
        }
        Ok(Self { dim, ops })
    }

    pub fn identity(d: usize) -> Self {
        Self { dim: d, ops: vec![CMat::identity(d, d)] }
    }

    pub fn unitary(u: CMat) -> Result<Self, QuantumError> {
        Self::new(vec![u])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[CMat] {
        &self.ops
    }

    pub fn apply(&self, rho: &CMat) -> Result<CMat, QuantumError> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(QuantumError::DimMismatch { expected: self.dim, found: rho.nrows() });
        }
        Ok(self.apply_unchecked(rho))
    }

    pub(crate) fn apply_unchecked(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for c in &self.ops {
            out += c * rho * c.adjoint();
        }
        out
    }

    /// Matrix of the map in the column-stacking convention: `Σ conj(C) ⊗ C`.
    pub fn superoperator(&self) -> Superoperator {
        let n = self.dim * self.dim;
        let mut m = CMat::zeros(n, n);
        for c in &self.ops {
            m += c.conjugate().kronecker(c);
        }
        Superoperator::from_matrix(m).expect("d²×d² by construction")
    }
}

pub(crate) fn closure_defect(ops: &[CMat]) -> f64 {
    let d = ops[0].nrows();
    let mut s = CMat::zeros(d, d);
    for c in ops {
        s += c.adjoint() * c;
    }
    max_abs_diff(&s, &CMat::identity(d, d))
}

/// `E[ρ]` with dimension checking.
pub fn apply_kraus(e: &KrausMap, rho: &CMat) -> Result<CMat, QuantumError> {
    e.apply(rho)
}
