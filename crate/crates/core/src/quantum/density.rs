use super::{QuantumError, TOL_EIG, TOL_HERM, TOL_TRACE};
use crate::linalg::{
    hermitian_eigenvalues, hermiticity_defect, pauli_x, pauli_y, pauli_z, re, trace, CMat, CVec,
};

/// A validated density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
}

pub(crate) fn check_square(m: &CMat) -> Result<usize, QuantumError> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(QuantumError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(QuantumError::NonFinite);
    }
    Ok(m.nrows())
}

impl DensityMatrix {
    pub fn new(mat: CMat) -> Result<Self, QuantumError> {
        check_square(&mat)?;
        let herm = hermiticity_defect(&mat);
        if herm > TOL_HERM {
            return Err(QuantumError::NonHermitian(herm));
        }
        let tr = trace(&mat).re;
        if (tr - 1.0).abs() > TOL_TRACE {
            return Err(QuantumError::NonUnitTrace(tr));
        }
        let min = hermitian_eigenvalues(&mat)[0];
        if min < -TOL_EIG {
            return Err(QuantumError::NegativeEigenvalue(min));
        }
        Ok(Self { mat })
    }

    /// `|ψ⟩⟨ψ|` for a state vector, normalized here.
    pub fn pure(psi: &CVec) -> Result<Self, QuantumError> {
        let norm = psi.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(QuantumError::NonFinite);
        }
        let v = psi / re(norm);
        Self::new(&v * v.adjoint())
    }

    /// Qubit state `(I + m·σ)/2`.
    pub fn from_bloch(m: [f64; 3]) -> Result<Self, QuantumError> {
        let mat = (CMat::identity(2, 2) + pauli_x() * re(m[0]) + pauli_y() * re(m[1]) + pauli_z() * re(m[2]))
            * re(0.5);
        Self::new(mat)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { mat: CMat::identity(d, d) * re(1.0 / d as f64) }
    }

    /// Basis projector `|k⟩⟨k|`.
    pub fn basis(d: usize, k: usize) -> Self {
        Self { mat: crate::linalg::matrix_unit(d, k, k) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
    }
}

/// Validating constructor.
pub fn make_density(matrix: CMat) -> Result<DensityMatrix, QuantumError> {
    DensityMatrix::new(matrix)
}

/// `δ = 1 − Tr ρ²`, defined for any square matrix.
pub fn linear_entropy(m: &CMat) -> f64 {
    1.0 - trace(&(m * m)).re
}

/// `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)` of a 2×2 operator.
pub fn bloch_vector(m: &CMat) -> [f64; 3] {
    assert_eq!(m.nrows(), 2, "Bloch vector needs a qubit operator");
    [
        trace(&(pauli_x() * m)).re,
        trace(&(pauli_y() * m)).re,
        trace(&(pauli_z() * m)).re,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matrix_unit, ZERO};

    #[test]
    fn validation_reports_each_defect() {
        let p0 = matrix_unit(2, 0, 0);
        let rho = make_density(p0).unwrap();
        assert_eq!(rho.eigenvalues(), vec![0.0, 1.0]);

        let bad = CMat::from_diagonal(&CVec::from_vec(vec![re(0.6), re(0.3)]));
        assert_eq!(make_density(bad), Err(QuantumError::NonUnitTrace(0.8999999999999999)));

        let mut nh = matrix_unit(2, 0, 0);
        nh[(0, 1)] = re(0.1);
        assert!(matches!(make_density(nh), Err(QuantumError::NonHermitian(_))));

        let neg = CMat::from_diagonal(&CVec::from_vec(vec![re(1.5), re(-0.5)]));
        assert_eq!(make_density(neg), Err(QuantumError::NegativeEigenvalue(-0.5)));

        assert!(matches!(
            make_density(CMat::from_element(2, 3, ZERO)),
            Err(QuantumError::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn entropy_values() {
        let plus = DensityMatrix::from_bloch([1.0, 0.0, 0.0]).unwrap();
        assert!(linear_entropy(plus.matrix()).abs() < 1e-15);
        assert!((linear_entropy(DensityMatrix::maximally_mixed(2).matrix()) - 0.5).abs() < 1e-15);
        let d = CMat::from_diagonal(&CVec::from_vec(vec![re(0.75), re(0.25)]));
        assert!((linear_entropy(&d) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn bloch_round_trip() {
        let m = [0.3, -0.4, 0.5];
        let rho = DensityMatrix::from_bloch(m).unwrap();
        let b = bloch_vector(rho.matrix());
        for k in 0..3 {
            assert!((b[k] - m[k]).abs() < 1e-15);
        }
    }
}
