//! Objective functions and the diagnostics run against them.
//!
//! An [`Objective`] supplies values and gradients together with local
//! Lipschitz data: a radius `r(x) > 0` and a constant `L(x) > 0` such that the
//! gradient is `L(x)`-Lipschitz on the ball `B(x, r(x))`. The built-ins report
//! this data in the Euclidean geometry of the coefficient array; the step-size
//! rules translate it to other `l^p` geometries (see
//! [`backtracking::LocalData`](crate::backtracking::LocalData)).

mod quadratic;
mod quartic;

pub use quadratic::{make_quadratic, Quadratic, QuadraticSpec};
pub use quartic::{make_quartic_saddle, QuarticSaddle};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sequence_space::VecP;

/// Which argument guarantees that `|grad f(x_n)| -> 0` along a weakly
/// convergent sequence forces the limit to be critical.
///
/// The tag is declarative; it is not (and cannot be) checked numerically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConditionC {
    /// `grad f(x) = A x + b` with `A` bounded linear: weak convergence of
    /// `x_n` gives weak convergence of `A x_n + b`, and the weak limit of a
    /// sequence tending to zero in norm is zero.
    Quadratic,
    /// Convex `C^1`: `f(y) >= f(x_n) + <grad f(x_n), y - x_n>` passes to the
    /// limit, so the weak limit minimizes `f` and is critical.
    Convex,
    /// Gradient of class `(S)_+`: weak convergence together with
    /// `limsup <grad f(x_n), x_n - x> <= 0` upgrades to strong convergence,
    /// after which continuity of the gradient finishes the argument.
    ClassSPlus,
    /// No argument available.
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CriticalKind {
    Minimum,
    Saddle,
    Maximum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint {
    pub point: VecP,
    pub kind: CriticalKind,
}

/// Result of [`classify_critical_point`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PointClass {
    Minimum,
    Saddle,
    Maximum,
    NotCritical,
    Indeterminate,
}

/// A differentiable function with local Lipschitz data for its gradient.
///
/// Implementations are immutable and evaluated concurrently from Monte Carlo
/// workers. All inputs are expected to have dimension [`dim`](Self::dim).
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn value(&self, x: &VecP) -> f64;

    /// Gradient at `x`, tagged with the exponent conjugate to that of `x`.
    fn gradient(&self, x: &VecP) -> VecP;

    /// Euclidean radius `r(x)`; defaults to `1 + |x|_2`.
    fn local_radius(&self, x: &VecP) -> f64 {
        1.0 + x.euclidean_norm()
    }

    /// Upper bound for the Euclidean operator norm of the Hessian on the
    /// Euclidean ball `B(x, local_radius(x))`.
    fn local_lipschitz(&self, x: &VecP) -> f64;

    /// `Hess f(x) v`, when available.
    fn hessian_action(&self, _x: &VecP, _v: &VecP) -> Option<VecP> {
        None
    }

    fn condition_c_class(&self) -> ConditionC;

    fn known_critical_points(&self) -> &[CriticalPoint] {
        &[]
    }
}

/// Largest relative mismatch between the gradient and central differences of
/// the value with step `h`, `max_j |fd_j - g_j| / max(1, |g_j|)`.
pub fn gradient_check(obj: &dyn Objective, x: &VecP, h: f64) -> f64 {
    let g = obj.gradient(x);
    let mut probe = x.coeffs().to_vec();
    let mut worst = 0.0_f64;
    for j in 0..x.dim() {
        let orig = probe[j];
        probe[j] = orig + h;
        let fp = obj.value(&VecP::from_raw(probe.clone(), x.exponent()));
        probe[j] = orig - h;
        let fm = obj.value(&VecP::from_raw(probe.clone(), x.exponent()));
        probe[j] = orig;
        let fd = (fp - fm) / (2.0 * h);
        let gj = g.coeffs()[j];
        worst = worst.max((fd - gj).abs() / gj.abs().max(1.0));
    }
    worst
}

/// Dense Hessian assembled column by column from the Hessian action, then
/// symmetrized.
pub fn assemble_hessian(obj: &dyn Objective, x: &VecP) -> Result<DMatrix<f64>> {
    let n = obj.dim();
    let mut h = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = obj
            .hessian_action(x, &VecP::from_raw(e.clone(), x.exponent()))
            .ok_or_else(|| Error::MissingHessian(obj.name().to_string()))?;
        for (i, v) in col.coeffs().iter().enumerate() {
            h[(i, j)] = *v;
        }
        e[j] = 0.0;
    }
    Ok((&h + h.transpose()) * 0.5)
}

/// Classifies `x` by the gradient norm and the eigenvalue signs of the
/// Hessian, using `tol` for both thresholds.
pub fn classify_critical_point(obj: &dyn Objective, x: &VecP, tol: f64) -> Result<PointClass> {
    if obj.gradient(x).norm() > tol {
        return Ok(PointClass::NotCritical);
    }
    let hess = assemble_hessian(obj, x)?;
    Ok(classify_eigenvalues(
        SymmetricEigen::new(hess).eigenvalues.as_slice(),
        tol,
    ))
}

pub(crate) fn classify_eigenvalues(eigs: &[f64], tol: f64) -> PointClass {
    let pos = eigs.iter().filter(|&&l| l > tol).count();
    let neg = eigs.iter().filter(|&&l| l < -tol).count();
    if pos == eigs.len() {
        PointClass::Minimum
    } else if neg == eigs.len() {
        PointClass::Maximum
    } else if pos > 0 && neg > 0 {
        PointClass::Saddle
    } else {
        PointClass::Indeterminate
    }
}

impl From<CriticalKind> for PointClass {
    fn from(k: CriticalKind) -> Self {
        match k {
            CriticalKind::Minimum => PointClass::Minimum,
            CriticalKind::Saddle => PointClass::Saddle,
            CriticalKind::Maximum => PointClass::Maximum,
        }
    }
}
