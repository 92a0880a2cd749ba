use super::choi::choi_of_superoperator;
use super::kraus::closure_defect;
use super::{KrausMap, QuantumError, CP_TOL, TOL_CLOSURE, TOL_TRACE_PRESERVING};
use crate::linalg::{expm, matrix_unit, re, unvectorize, vectorize, CMat, ONE};

/// Linear map on `d×d` operators as a `d²×d²` matrix (column stacking).
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMat,
}

impl Superoperator {
    pub fn from_matrix(matrix: CMat) -> Result<Self, QuantumError> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(QuantumError::NotSquare { rows: n, cols: matrix.ncols() });
        }
        let dim = (n as f64).sqrt().round() as usize;
        if dim * dim != n || dim == 0 {
            return Err(QuantumError::DimMismatch { expected: dim * dim, found: n });
        }
        Ok(Self { dim, matrix })
    }

    /// Tabulates an arbitrary linear map from its action on matrix units.
    pub fn from_fn<F: Fn(&CMat) -> CMat>(dim: usize, f: F) -> Self {
        let n = dim * dim;
        let mut matrix = CMat::zeros(n, n);
        for j in 0..dim {
            for i in 0..dim {
                let img = vectorize(&f(&matrix_unit(dim, i, j)));
                matrix.set_column(i + j * dim, &img);
            }
        }
        Self { dim, matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, matrix: CMat::identity(dim * dim, dim * dim) }
    }

    /// `X ↦ A X B`.
    pub fn sandwich(a: &CMat, b: &CMat) -> Self {
        Self { dim: a.nrows(), matrix: b.transpose().kronecker(a) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn apply(&self, x: &CMat) -> Result<CMat, QuantumError> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(QuantumError::DimMismatch { expected: self.dim, found: x.nrows() });
        }
        Ok(unvectorize(&(&self.matrix * vectorize(x)), self.dim))
    }

    /// `exp(s·M)`.
    pub fn exp_scaled(&self, s: f64) -> Self {
        Self { dim: self.dim, matrix: expm(&(&self.matrix * re(s))) }
    }

    /// Largest entry of `t·M` where `t` is the trace functional.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let n = d * d;
        let mut worst = 0.0_f64;
        for col in 0..n {
            let mut s = re(0.0);
            for i in 0..d {
                s += self.matrix[(i + i * d, col)];
            }
            worst = worst.max(s.norm());
        }
        worst
    }
}

/// Trace-annihilating superoperator: the `L` of `dρ/dt = ∫K L[ρ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    op: Superoperator,
}

impl GeneratorMatrix {
    pub fn new(op: Superoperator) -> Result<Self, QuantumError> {
        let defect = op.trace_defect();
        if defect > TOL_TRACE_PRESERVING {
            return Err(QuantumError::NotTracePreserving(defect));
        }
        Ok(Self { op })
    }

    pub fn from_matrix(matrix: CMat) -> Result<Self, QuantumError> {
        Self::new(Superoperator::from_matrix(matrix)?)
    }

    pub fn zero(dim: usize) -> Self {
        Self { op: Superoperator::from_matrix(CMat::zeros(dim * dim, dim * dim)).expect("square") }
    }

    /// `−i[H, ρ] + Σ c (2VρV† − V†Vρ − ρV†V)`, i.e. the form
    /// `Σ c ([V, ρV†] + [Vρ, V†])` with rate `c` per jump operator `V`.
    pub fn lindblad(hamiltonian: Option<&CMat>, jumps: &[(f64, CMat)]) -> Result<Self, QuantumError> {
        let dim = hamiltonian
            .map(|h| h.nrows())
            .or_else(|| jumps.first().map(|j| j.1.nrows()))
            .ok_or(QuantumError::Empty)?;
        let id = CMat::identity(dim, dim);
        let n = dim * dim;
        let mut m = CMat::zeros(n, n);
        let i = re(0.0) + crate::linalg::IM;
        if let Some(h) = hamiltonian {
            if h.nrows() != dim || h.ncols() != dim {
                return Err(QuantumError::DimMismatch { expected: dim, found: h.nrows() });
            }
            m -= Superoperator::sandwich(h, &id).matrix * i;
            m += Superoperator::sandwich(&id, h).matrix * i;
        }
        for (c, v) in jumps {
            if v.nrows() != dim || v.ncols() != dim {
                return Err(QuantumError::DimMismatch { expected: dim, found: v.nrows() });
            }
            let vd = v.adjoint();
            let vdv = &vd * v;
            let term = Superoperator::sandwich(v, &vd).matrix * re(2.0)
                - Superoperator::sandwich(&vdv, &id).matrix
                - Superoperator::sandwich(&id, &vdv).matrix;
            m += term * re(*c);
        }
        Self::from_matrix(m)
    }

    pub fn dim(&self) -> usize {
        self.op.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.op.matrix
    }

    pub fn as_superoperator(&self) -> &Superoperator {
        &self.op
    }

    pub fn apply(&self, x: &CMat) -> Result<CMat, QuantumError> {
        self.op.apply(x)
    }

    /// `exp(κL)` as a superoperator.
    pub fn propagator(&self, kappa: f64) -> Superoperator {
        self.op.exp_scaled(kappa)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { op: Superoperator { dim: self.op.dim, matrix: &self.op.matrix * re(s) } }
    }

    pub fn plus(&self, other: &Self) -> Result<Self, QuantumError> {
        if self.dim() != other.dim() {
            return Err(QuantumError::DimMismatch { expected: self.dim(), found: other.dim() });
        }
        Self::from_matrix(&self.op.matrix + &other.op.matrix)
    }
}

/// `L = E − I`.
pub fn lindblad_from_kraus(e: &KrausMap) -> Result<GeneratorMatrix, QuantumError> {
    let defect = closure_defect(e.operators());
    if defect > TOL_CLOSURE {
        return Err(QuantumError::ClosureDefect(defect));
    }
    let n = e.dim() * e.dim();
    let m = e.superoperator().matrix().clone() - CMat::identity(n, n);
    GeneratorMatrix::from_matrix(m)
}

/// `Σ_a P(a) E_a − I` for a discrete mixture of channels.
pub fn mixture_generator(maps: &[(f64, KrausMap)]) -> Result<GeneratorMatrix, QuantumError> {
    let first = maps.first().ok_or(QuantumError::Empty)?;
    let dim = first.1.dim();
    let mut total = 0.0;
    for (w, e) in maps {
        if !(w.is_finite() && *w >= 0.0) {
            return Err(QuantumError::BadWeights(format!("weight {w} is negative or not finite")));
        }
        if e.dim() != dim {
            return Err(QuantumError::DimMismatch { expected: dim, found: e.dim() });
        }
        total += w;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(QuantumError::BadWeights(format!("weights sum to {total}")));
    }
    let n = dim * dim;
    let mut m = CMat::zeros(n, n);
    for (w, e) in maps {
        m += e.superoperator().matrix() * re(*w);
    }
    m -= CMat::identity(n, n) * ONE;
    GeneratorMatrix::from_matrix(m)
}

/// Kraus operators of `exp(κ L0)` from the eigendecomposition of its Choi
/// matrix.
pub fn exp_generator_to_kraus(l0: &GeneratorMatrix, kappa: f64) -> Result<KrausMap, QuantumError> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(QuantumError::BadWeights(format!("control parameter must be positive, got {kappa}")));
    }
    let prop = l0.propagator(kappa);
    let report = choi_of_superoperator(&prop);
    if report.cp_defect < -CP_TOL {
        return Err(QuantumError::NotCP(report.cp_defect));
    }
    KrausMap::new(report.choi.kraus_operators())
}
