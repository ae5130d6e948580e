mod common;

use bdescent::experiments::sample_ball;
use bdescent::objectives::{
    classify_critical_point, gradient_check, make_quadratic, CriticalKind, Objective, PointClass,
    QuadraticSpec,
};
use bdescent::VecP;
use common::{builtins, cube_point, e, rng};
use nalgebra::DMatrix;
use rand::Rng;

#[test]
fn gradients_match_central_differences() {
    let mut r = rng(11);
    for b in builtins() {
        for _ in 0..100 {
            let x = cube_point(b.obj.dim(), b.spread, &mut r);
            let err = gradient_check(b.obj.as_ref(), &x, 1e-5);
            assert!(err <= 1e-6, "{}: discrepancy {err:e}", b.label);
        }
    }
}

/// A point of the open ball: exact rejection sampling in low dimension, a
/// random direction at a random fraction of the radius otherwise.
fn in_ball(dim: usize, radius: f64, r: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    if dim <= 10 {
        return sample_ball(dim, radius, r);
    }
    let v: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
    let len = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let t = r.gen_range(0.0..1.0) * radius / len;
    v.into_iter().map(|c| c * t).collect()
}

#[test]
fn local_lipschitz_bounds_hold_on_the_local_ball() {
    let mut r = rng(12);
    for b in builtins() {
        let d = b.obj.dim();
        for _ in 0..20 {
            let x = cube_point(d, b.spread, &mut r);
            let radius = b.obj.local_radius(&x);
            let lip = b.obj.local_lipschitz(&x);
            for _ in 0..50 {
                let shift = |r: &mut _| {
                    let s = in_ball(d, radius, r);
                    let c: Vec<f64> = x.coeffs().iter().zip(&s).map(|(a, b)| a + b).collect();
                    VecP::euclidean(c).unwrap()
                };
                let u = shift(&mut r);
                let w = shift(&mut r);
                let dg = b.obj.gradient(&u).sub(&b.obj.gradient(&w)).unwrap().norm();
                let dx = u.sub(&w).unwrap().norm();
                assert!(
                    dg <= lip * dx * (1.0 + 1e-10),
                    "{}: |dg| = {dg:e} > L |dx| = {:e}",
                    b.label,
                    lip * dx
                );
            }
        }
    }
}

#[test]
fn quadratic_gradients_are_affine() {
    let a = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.5, -1.0, 3.0, 0.0, 0.5, 0.0, -1.0]);
    let q = make_quadratic(QuadraticSpec::new(a.clone(), e(&[0.3, -0.2, 1.0])).unwrap()).unwrap();
    let mut r = rng(13);
    for _ in 0..100 {
        let x = cube_point(3, 5.0, &mut r);
        let y = cube_point(3, 5.0, &mut r);
        let lhs = q.gradient(&x).sub(&q.gradient(&y)).unwrap();
        let dx = nalgebra::DVector::from_column_slice(x.sub(&y).unwrap().coeffs());
        let rhs = &a * dx;
        for (l, r) in lhs.coeffs().iter().zip(rhs.iter()) {
            assert!((l - r).abs() <= 1e-12 * (1.0 + r.abs()));
        }
    }
}

#[test]
fn diagonal_quadratic_with_offset() {
    let spec = QuadraticSpec::new(
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 8.0])),
        e(&[-2.0, -8.0]),
    )
    .unwrap();
    let q = make_quadratic(spec).unwrap();
    let cps = q.known_critical_points();
    assert_eq!(cps.len(), 1);
    for (c, want) in cps[0].point.coeffs().iter().zip([1.0, 1.0]) {
        assert!((c - want).abs() < 1e-14);
    }
    assert_eq!(cps[0].kind, CriticalKind::Minimum);
    assert!((q.local_lipschitz(&e(&[0.0, 0.0])) - 8.0).abs() < 1e-9);
}

#[test]
fn known_critical_points_are_critical_and_correctly_classified() {
    for b in builtins() {
        if b.obj.dim() > 200 {
            continue;
        }
        let cps = b.obj.known_critical_points();
        assert!(!cps.is_empty(), "{} declares no critical points", b.label);
        for cp in cps {
            let g = b.obj.gradient(&cp.point).norm();
            assert!(g <= 1e-10, "{}: |grad| = {g:e}", b.label);
            let class = classify_critical_point(b.obj.as_ref(), &cp.point, 1e-8).unwrap();
            let want = match cp.kind {
                CriticalKind::Minimum => PointClass::Minimum,
                CriticalKind::Saddle => PointClass::Saddle,
                CriticalKind::Maximum => PointClass::Maximum,
            };
            assert_eq!(class, want, "{}", b.label);
        }
    }
}
