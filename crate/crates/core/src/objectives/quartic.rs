use super::{ConditionC, CriticalKind, CriticalPoint, Objective};
use crate::error::{Error, Result};
use crate::sequence_space::{Exponent, VecP};

/// `f(x) = x1^2 - x2^2 + x2^4 / 2 + 1/2 sum_{j>=3} x_j^2`.
///
/// Bounded below, with a saddle at the origin and minima at `(0, +-1, 0, ...)`
/// where `f = -1/2`. The hyperplane `x2 = 0` is invariant under gradient steps
/// and is the stable manifold of the saddle.
#[derive(Clone, Debug)]
pub struct QuarticSaddle {
    dim: usize,
    critical: Vec<CriticalPoint>,
}

pub fn make_quartic_saddle(dim: usize) -> Result<QuarticSaddle> {
    if dim < 2 {
        return Err(Error::invalid("dim", "the quartic saddle needs dim >= 2"));
    }
    let point = |x2: f64| {
        let mut c = vec![0.0; dim];
        c[1] = x2;
        VecP::from_raw(c, Exponent::EUCLIDEAN)
    };
    let critical = vec![
        CriticalPoint {
            point: point(0.0),
            kind: CriticalKind::Saddle,
        },
        CriticalPoint {
            point: point(1.0),
            kind: CriticalKind::Minimum,
        },
        CriticalPoint {
            point: point(-1.0),
            kind: CriticalKind::Minimum,
        },
    ];
    Ok(QuarticSaddle { dim, critical })
}

impl Objective for QuarticSaddle {
    fn name(&self) -> &str {
        "quartic"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &VecP) -> f64 {
        let c = x.coeffs();
        let tail: f64 = c[2..].iter().map(|v| v * v).sum();
        c[0] * c[0] - c[1] * c[1] + 0.5 * c[1].powi(4) + 0.5 * tail
    }

    fn gradient(&self, x: &VecP) -> VecP {
        let c = x.coeffs();
        let mut g = c.to_vec();
        g[0] = 2.0 * c[0];
        g[1] = -2.0 * c[1] + 2.0 * c[1].powi(3);
        VecP::from_raw(g, x.exponent().conjugate())
    }

    /// The Hessian is `diag(2, 6 x2^2 - 2, 1, ...)`; on `B(x, r)` we have
    /// `|z2| <= |x| + r`, hence `|Hess| <= max(2, 6 (|x| + r)^2 + 2)`.
    fn local_lipschitz(&self, x: &VecP) -> f64 {
        let n = x.euclidean_norm();
        let reach = n + self.local_radius(x);
        (6.0 * reach * reach + 2.0).max(2.0)
    }

    fn hessian_action(&self, x: &VecP, v: &VecP) -> Option<VecP> {
        let x2 = x.coeffs()[1];
        let mut out = v.coeffs().to_vec();
        out[0] *= 2.0;
        out[1] *= 6.0 * x2 * x2 - 2.0;
        Some(VecP::from_raw(out, x.exponent().conjugate()))
    }

    fn condition_c_class(&self) -> ConditionC {
        ConditionC::Unknown
    }

    fn known_critical_points(&self) -> &[CriticalPoint] {
        &self.critical
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{assemble_hessian, gradient_check};

    fn e(c: &[f64]) -> VecP {
        VecP::euclidean(c.to_vec()).unwrap()
    }

    #[test]
    fn minimum_example() {
        let q = make_quartic_saddle(3).unwrap();
        let m = e(&[0.0, 1.0, 0.0]);
        assert_eq!(q.gradient(&m).coeffs(), &[0.0, 0.0, 0.0]);
        assert_eq!(q.value(&m), -0.5);
        assert!(gradient_check(&q, &m, 1e-5) < 1e-9);
    }

    #[test]
    fn saddle_example() {
        let q = make_quartic_saddle(4).unwrap();
        let z = e(&[0.0; 4]);
        assert!(q.gradient(&z).is_zero());
        let h = assemble_hessian(&q, &z).unwrap();
        assert_eq!(h.diagonal().as_slice(), &[2.0, -2.0, 1.0, 1.0]);
    }

    #[test]
    fn value_example() {
        let q = make_quartic_saddle(3).unwrap();
        assert_eq!(q.value(&e(&[1.0, 0.0, 0.0])), 1.0);
    }

    #[test]
    fn lipschitz_bound_at_origin_and_minimum() {
        let q = make_quartic_saddle(3).unwrap();
        // |x| = 0, r = 1: 6 + 2
        assert_eq!(q.local_lipschitz(&e(&[0.0; 3])), 8.0);
        // |x| = 1, r = 2: 6 * 9 + 2
        assert_eq!(q.local_lipschitz(&e(&[0.0, 1.0, 0.0])), 56.0);
    }

    #[test]
    fn small_dimension_rejected() {
        assert!(make_quartic_saddle(1).is_err());
    }
}
