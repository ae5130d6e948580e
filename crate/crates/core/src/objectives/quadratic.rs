use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{ConditionC, CriticalKind, CriticalPoint, Objective};
use crate::error::{Error, Result};
use crate::sequence_space::{dot, VecP};

const SYMMETRY_TOL: f64 = 1e-12;
const POWER_REL_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 100_000;

/// `f(x) = 1/2 <A x, x> + <b, x>` with symmetric `A`.
#[derive(Clone, Debug)]
pub struct QuadraticSpec {
    a: DMatrix<f64>,
    b: VecP,
}

impl QuadraticSpec {
    pub fn new(a: DMatrix<f64>, b: VecP) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::invalid(
                "A",
                format!("{}x{} is not square", a.nrows(), a.ncols()),
            ));
        }
        if a.nrows() == 0 {
            return Err(Error::invalid("A", "empty matrix"));
        }
        if a.nrows() != b.dim() {
            return Err(Error::DimensionMismatch {
                left: a.nrows(),
                right: b.dim(),
            });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("A", "non-finite entry"));
        }
        let asym = (&a - a.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::AsymmetricMatrix(asym));
        }
        Ok(QuadraticSpec { a, b })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

#[derive(Clone, Debug)]
pub struct Quadratic {
    name: String,
    a: DMatrix<f64>,
    b: Vec<f64>,
    lipschitz: f64,
    critical: Vec<CriticalPoint>,
}

/// Builds the quadratic objective: `grad f = A x + b`, `L = |A|_2` by power
/// iteration, critical point `-A^{-1} b` when `A` is invertible.
pub fn make_quadratic(spec: QuadraticSpec) -> Result<Quadratic> {
    let QuadraticSpec { a, b } = spec;
    let lipschitz = spectral_norm(&a);
    let eigs = SymmetricEigen::new(a.clone()).eigenvalues;
    let scale = eigs.amax();
    let invertible = scale > 0.0 && eigs.iter().all(|l| l.abs() > 1e-12 * scale);
    let mut critical = Vec::new();
    if invertible {
        let rhs = -DVector::from_column_slice(b.coeffs());
        if let Some(z) = a.clone().lu().solve(&rhs) {
            let kind = if eigs.iter().all(|&l| l > 0.0) {
                CriticalKind::Minimum
            } else if eigs.iter().all(|&l| l < 0.0) {
                CriticalKind::Maximum
            } else {
                CriticalKind::Saddle
            };
            critical.push(CriticalPoint {
                point: VecP::from_raw(z.as_slice().to_vec(), b.exponent()),
                kind,
            });
        }
    }
    Ok(Quadratic {
        name: "quadratic".to_string(),
        a,
        b: b.into_coeffs(),
        // an all-zero A still needs a positive constant
        lipschitz: if lipschitz > 0.0 {
            lipschitz
        } else {
            f64::MIN_POSITIVE
        },
        critical,
    })
}

/// Largest singular value of `a` by power iteration, stopped once successive
/// estimates agree to `POWER_REL_TOL`.
pub(crate) fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    // generic start: not orthogonal to any eigenvector of a diagonal matrix
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i + 1) as f64).sin());
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = a * &v;
        let s = w.norm();
        if s == 0.0 {
            return 0.0;
        }
        let done = (s - est).abs() <= POWER_REL_TOL * s;
        est = s;
        v = w / s;
        if done {
            break;
        }
    }
    est
}

impl Quadratic {
    /// `A = I`, `b = 0`.
    pub fn identity(dim: usize) -> Result<Self> {
        Self::diagonal("identity", &vec![1.0; dim])
    }

    /// `A = diag(1, -1, 1, ..., 1)`, `b = 0`: a single saddle at the origin.
    pub fn indefinite(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid(
                "dim",
                "the indefinite quadratic needs dim >= 2",
            ));
        }
        let mut d = vec![1.0; dim];
        d[1] = -1.0;
        Self::diagonal("indefinite", &d)
    }

    pub fn diagonal(name: &str, d: &[f64]) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::invalid("dim", "must be positive"));
        }
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(d));
        let spec = QuadraticSpec::new(a, VecP::zeros(d.len(), crate::Exponent::EUCLIDEAN))?;
        let mut q = make_quadratic(spec)?;
        q.name = name.to_string();
        Ok(q)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.a * DVector::from_column_slice(x);
        v.data.into()
    }
}

impl Objective for Quadratic {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &VecP) -> f64 {
        let ax = self.apply(x.coeffs());
        0.5 * dot(&ax, x.coeffs()) + dot(&self.b, x.coeffs())
    }

    fn gradient(&self, x: &VecP) -> VecP {
        let mut g = self.apply(x.coeffs());
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi += bi;
        }
        VecP::from_raw(g, x.exponent().conjugate())
    }

    fn local_lipschitz(&self, _x: &VecP) -> f64 {
        self.lipschitz
    }

    fn hessian_action(&self, x: &VecP, v: &VecP) -> Option<VecP> {
        Some(VecP::from_raw(
            self.apply(v.coeffs()),
            x.exponent().conjugate(),
        ))
    }

    fn condition_c_class(&self) -> ConditionC {
        ConditionC::Quadratic
    }

    fn known_critical_points(&self) -> &[CriticalPoint] {
        &self.critical
    }
}
