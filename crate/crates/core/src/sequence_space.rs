//! Finite truncations of `l^p` sequence spaces.
//!
//! A [`VecP`] is a dense coefficient array together with the exponent of the
//! norm it is measured in. Gradients live in the dual space: when the iterates
//! are measured in `l^q`, gradients are measured in `l^p` with
//! `1/p + 1/q = 1`, and [`duality_map`] carries a gradient back to the primal
//! space with `<y, J(y)> = |y|^2` and `|J(y)|_q = |y|_p`.

use std::fmt;

use crate::error::{Error, Result};

/// An exponent `p` in `(1, inf)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const EUCLIDEAN: Exponent = Exponent(2.0);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 1.0 {
            Ok(Exponent(p))
        } else {
            Err(Error::InvalidExponent(p))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// Hölder conjugate `q = p / (p - 1)`.
    pub fn conjugate(self) -> Exponent {
        if self.0 == 2.0 {
            self
        } else {
            Exponent(self.0 / (self.0 - 1.0))
        }
    }

    #[inline]
    pub fn is_euclidean(self) -> bool {
        self.0 == 2.0
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense coefficient vector measured in the `l^p` norm.
///
/// Coefficients are always finite; constructors reject NaN and infinities.
#[derive(Clone, Debug, PartialEq)]
pub struct VecP {
    coeffs: Vec<f64>,
    p: Exponent,
}

impl VecP {
    pub fn new(coeffs: Vec<f64>, p: Exponent) -> Result<Self> {
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoefficient(i));
        }
        Ok(VecP { coeffs, p })
    }

    /// Euclidean (`p = 2`) vector.
    pub fn euclidean(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(coeffs, Exponent::EUCLIDEAN)
    }

    pub fn zeros(dim: usize, p: Exponent) -> Self {
        VecP {
            coeffs: vec![0.0; dim],
            p,
        }
    }

    /// Wraps coefficients produced by arithmetic on already-valid vectors.
    /// Finiteness is the caller's responsibility; the driver re-checks every
    /// evaluation it consumes.
    pub(crate) fn from_raw(coeffs: Vec<f64>, p: Exponent) -> Self {
        VecP { coeffs, p }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn exponent(&self) -> Exponent {
        self.p
    }

    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// `(sum_j |v_j|^p)^(1/p)`, see [`norm`].
    pub fn norm(&self) -> f64 {
        lp_norm(&self.coeffs, self.p.get())
    }

    /// Plain Euclidean length of the coefficient array, whatever `p` is.
    pub fn euclidean_norm(&self) -> f64 {
        lp_norm(&self.coeffs, 2.0)
    }

    pub fn scaled(&self, a: f64) -> VecP {
        VecP::from_raw(self.coeffs.iter().map(|c| a * c).collect(), self.p)
    }

    /// `self - other`; both operands must share dimension and exponent.
    pub fn sub(&self, other: &VecP) -> Result<VecP> {
        axpy(-1.0, other, self)
    }

    /// Same coefficients, re-tagged with another exponent.
    pub fn with_exponent(&self, p: Exponent) -> VecP {
        VecP::from_raw(self.coeffs.clone(), p)
    }

    fn check_compatible(&self, other: &VecP) -> Result<()> {
        check_dims(self.dim(), other.dim())?;
        if self.p != other.p {
            return Err(Error::ExponentMismatch {
                left: self.p.get(),
                right: other.p.get(),
            });
        }
        Ok(())
    }
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        Err(Error::DimensionMismatch { left, right })
    } else {
        Ok(())
    }
}

/// `l^p` norm of a raw slice, evaluated with the largest magnitude factored
/// out so that `|v_j|^p` neither overflows nor underflows.
pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    let scale = v.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        let s: f64 = v.iter().map(|c| (c / scale) * (c / scale)).sum();
        return scale * s.sqrt();
    }
    let s: f64 = v.iter().map(|c| (c.abs() / scale).powf(p)).sum();
    scale * s.powf(1.0 / p)
}

/// `(sum_j |v_j|^p)^(1/p)`.
pub fn norm(v: &VecP) -> f64 {
    v.norm()
}

/// Dual pairing `<y, x> = sum_j y_j x_j`.
///
/// `y` is a functional (measured in the conjugate exponent of `x`), so only
/// dimensions are compared.
pub fn pairing(y: &VecP, x: &VecP) -> Result<f64> {
    check_dims(y.dim(), x.dim())?;
    Ok(dot(y.coeffs(), x.coeffs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Normalized duality mapping `J: l^p -> l^q`,
/// `J(y)_j = |y_j|^(p-1) sign(y_j) / |y|_p^(p-2)`, with `J(0) = 0`.
///
/// Evaluated as `|y| * (|y_j| / |y|)^(p-1) * sign(y_j)`, which is the same
/// quantity without forming `|y|^(p-2)`. For `p = 2` the input is returned
/// unchanged.
pub fn duality_map(y: &VecP) -> VecP {
    let p = y.exponent();
    let q = p.conjugate();
    if p.is_euclidean() {
        return y.clone();
    }
    let n = y.norm();
    if n == 0.0 {
        return VecP::zeros(y.dim(), q);
    }
    let pm1 = p.get() - 1.0;
    let coeffs = y
        .coeffs()
        .iter()
        .map(|&c| {
            if c == 0.0 {
                0.0
            } else {
                n * (c.abs() / n).powf(pm1) * c.signum()
            }
        })
        .collect();
    VecP::from_raw(coeffs, q)
}

/// `a * x + y`, elementwise.
pub fn axpy(a: f64, x: &VecP, y: &VecP) -> Result<VecP> {
    x.check_compatible(y)?;
    let coeffs = x
        .coeffs()
        .iter()
        .zip(y.coeffs())
        .map(|(xi, yi)| a * xi + yi)
        .collect();
    Ok(VecP::from_raw(coeffs, y.p))
}
