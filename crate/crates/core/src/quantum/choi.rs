use super::{QuantumError, Superoperator};
use crate::linalg::{hermitian_eigen, matrix_unit, re, CMat};

/// Eigenvalue threshold for the CP verdict.
pub const CP_TOL: f64 = 1e-9;

/// `C = Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`, i.e. `C[(i·d+k), (j·d+l)] = Φ(|i⟩⟨j|)[k, l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    matrix: CMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiReport {
    pub choi: ChoiMatrix,
    /// Smallest eigenvalue of the Choi matrix.
    pub cp_defect: f64,
}

impl ChoiReport {
    pub fn is_cp(&self) -> bool {
        self.cp_defect >= -CP_TOL
    }
}

impl ChoiMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        crate::linalg::hermitian_eigenvalues(&self.matrix)
    }

    /// Kraus operators from the positive part of the spectrum: an
    /// eigenvector `v` of weight `μ` gives `K[k, i] = √μ · v[i·d + k]`.
    pub fn kraus_operators(&self) -> Vec<CMat> {
        let d = self.dim;
        let (values, vectors) = hermitian_eigen(&self.matrix);
        let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
        let mut ops = Vec::new();
        for (idx, &mu) in values.iter().enumerate().rev() {
            if mu <= 1e-14 * scale {
                continue;
            }
            let v = vectors.column(idx);
            let s = re(mu.sqrt());
            ops.push(CMat::from_fn(d, d, |k, i| v[i * d + k] * s));
        }
        ops
    }
}

/// Assembles the Choi matrix from the images `images[i·d + j] = Φ(|i⟩⟨j|)`.
pub fn choi_from_images(dim: usize, images: &[CMat]) -> Result<ChoiReport, QuantumError> {
    if images.len() != dim * dim {
        return Err(QuantumError::DimMismatch { expected: dim * dim, found: images.len() });
    }
    let n = dim * dim;
    let mut matrix = CMat::zeros(n, n);
    for i in 0..dim {
        for j in 0..dim {
            let img = &images[i * dim + j];
            if img.nrows() != dim || img.ncols() != dim {
                return Err(QuantumError::DimMismatch { expected: dim, found: img.nrows() });
            }
            for k in 0..dim {
                for l in 0..dim {
                    matrix[(i * dim + k, j * dim + l)] = img[(k, l)];
                }
            }
        }
    }
    let choi = ChoiMatrix { dim, matrix };
    let cp_defect = choi.eigenvalues()[0];
    Ok(ChoiReport { choi, cp_defect })
}

pub fn choi_of_superoperator(op: &Superoperator) -> ChoiReport {
    let d = op.dim();
    let images: Vec<CMat> = (0..d * d)
        .map(|k| op.apply(&matrix_unit(d, k / d, k % d)).expect("dimension matches"))
        .collect();
    choi_from_images(d, &images).expect("dimension matches")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, trace};
    use crate::quantum::KrausMap;

    #[test]
    fn identity_map_gives_maximally_entangled_projector() {
        let d = 3;
        let report = choi_of_superoperator(&Superoperator::identity(d));
        let mut omega = CMat::zeros(d * d, 1);
        for i in 0..d {
            omega[(i * d + i, 0)] = re(1.0);
        }
        let want = &omega * omega.adjoint();
        assert!(max_abs_diff(report.choi.matrix(), &want) < 1e-15);
        assert!(report.cp_defect.abs() < 1e-12);
        assert!((trace(report.choi.matrix()).re - d as f64).abs() < 1e-12);
    }

    #[test]
    fn transpose_map_is_not_cp() {
        let op = Superoperator::from_fn(2, |x| x.transpose());
        let report = choi_of_superoperator(&op);
        assert!((report.cp_defect + 1.0).abs() < 1e-12);
        assert!(!report.is_cp());
    }

    #[test]
    fn kraus_round_trip() {
        let e = KrausMap::new(vec![
            CMat::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(0.6)]),
            CMat::from_row_slice(2, 2, &[re(0.0), re(0.8), re(0.0), re(0.0)]),
        ])
        .unwrap();
        let report = choi_of_superoperator(&e.superoperator());
        let back = KrausMap::new(report.choi.kraus_operators()).unwrap();
        assert!(max_abs_diff(back.superoperator().matrix(), e.superoperator().matrix()) < 1e-13);
        assert_eq!(back.operators().len(), 2);
    }

    #[test]
    fn wrong_image_count() {
        assert!(matches!(
            choi_from_images(2, &[CMat::identity(2, 2)]),
            Err(QuantumError::DimMismatch { expected: 4, found: 1 })
        ));
    }
}
