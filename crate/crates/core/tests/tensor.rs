use std::f64::consts::{E, FRAC_PI_2};

use approx::assert_relative_eq;
use elliptika::tensor::*;
use elliptika::Error;
use nalgebra::{Matrix3, SymmetricEigen};
use proptest::prelude::*;

fn to_na(m: &SquareMatrix) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m[(i, j)])
}

fn matrix3() -> impl Strategy<Value = SquareMatrix> {
    prop::array::uniform9(-2.0..2.0f64).prop_map(|a| SquareMatrix::from_fn(3, |i, j| a[3 * i + j]))
}

fn gl_plus3() -> impl Strategy<Value = SquareMatrix> {
    matrix3().prop_map(|m| m + SquareMatrix::identity(3) * 2.5).prop_filter("det > 0.05", |m| m.det() > 0.05)
}

fn spd3() -> impl Strategy<Value = SymmetricTensor> {
    matrix3().prop_map(|a| SymmetricTensor::symmetrize(&(a * a.transpose() + SquareMatrix::identity(3) * 0.1)))
}

fn rotation() -> impl Strategy<Value = SquareMatrix> {
    (prop::array::uniform3(-1.0..1.0f64), -3.0..3.0f64).prop_filter_map("axis", |(a, theta)| {
        let v = Vector::new(&a).ok()?;
        let u = v.normalized().ok()?;
        rotation_about_axis(&u, theta).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn eigen_reconstruction_and_cubic_oracle(s in spd3()) {
        let d = sym_eig(&s).unwrap();
        let back = d.reconstruct();
        prop_assert!((*back.matrix() - *s.matrix()).norm() <= 1e-12 * s.norm().max(1.0));
        let mut ours = d.eigenvalues().to_vec();
        ours.sort_by(f64::total_cmp);
        let mut oracle: Vec<f64> = SymmetricEigen::new(to_na(s.matrix())).eigenvalues.iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        for k in 0..3 {
            prop_assert!((ours[k] - oracle[k]).abs() <= 1e-11 * s.norm());
        }
    }

    #[test]
    fn log_exp_round_trip(s in spd3()) {
        let back = sym_exp(&spd_log(&s).unwrap()).unwrap();
        prop_assert!((back.into_matrix() - *s.matrix()).norm() <= 1e-10 * s.norm());
    }

    #[test]
    fn polar_factors(f in gl_plus3()) {
        let u = right_stretch(&f).unwrap();
        let v = left_stretch(&f).unwrap();
        let c = f.transpose() * f;
        prop_assert!((*u.matrix() * *u.matrix() - c).norm() <= 1e-10 * c.norm());
        let b = f * f.transpose();
        prop_assert!((*v.matrix() * *v.matrix() - b).norm() <= 1e-10 * b.norm());
        // R = F U⁻¹ is a rotation and V = R U Rᵀ
        let r = f * u.matrix().inverse().unwrap();
        prop_assert!((r.transpose() * r - SquareMatrix::identity(3)).norm() <= 1e-10);
        prop_assert!((r * *u.matrix() * r.transpose() - *v.matrix()).norm() <= 1e-9 * v.norm());
    }

    #[test]
    fn trace_log_is_log_det(f in gl_plus3()) {
        let l = spd_log(&right_stretch(&f).unwrap()).unwrap();
        prop_assert!((l.trace() - f.det().ln()).abs() <= 1e-10 * (1.0 + f.det().ln().abs()));
    }

    #[test]
    fn singular_values_match_nalgebra(f in gl_plus3()) {
        let mut ours = singular_system(&f).unwrap().values().to_vec();
        ours.sort_by(f64::total_cmp);
        let mut oracle: Vec<f64> = to_na(&f).svd(false, false).singular_values.iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        for k in 0..3 {
            prop_assert!((ours[k] - oracle[k]).abs() <= 1e-12 * oracle[2]);
        }
    }

    #[test]
    fn rotations_are_orthogonal(q in rotation()) {
        prop_assert!((q.transpose() * q - SquareMatrix::identity(3)).norm() <= 1e-13);
        prop_assert!((q.det() - 1.0).abs() <= 1e-13);
    }

    #[test]
    fn cofactor_identity(f in gl_plus3()) {
        let expected = f.inverse_transpose().unwrap() * f.det();
        prop_assert!((cofactor(&f) - expected).norm() <= 1e-10 * expected.norm());
    }

    #[test]
    fn deviatoric_is_traceless(s in spd3()) {
        let d = deviatoric(&s);
        prop_assert!(d.trace().abs() <= 1e-12 * s.norm());
    }
}

#[test]
fn diagonal_eigen_and_log() {
    let s = SymmetricTensor::diag(&[E.powi(16), E.powi(4)]).unwrap();
    let d = sym_eig(&s).unwrap();
    let mut l = d.eigenvalues().to_vec();
    l.sort_by(f64::total_cmp);
    assert_eq!(l, vec![E.powi(4), E.powi(16)]);
    let log = spd_log(&s).unwrap();
    assert_relative_eq!(log[(0, 0)], 16.0, max_relative = 1e-15);
    assert_relative_eq!(log[(1, 1)], 4.0, max_relative = 1e-15);
    assert_eq!(log[(0, 1)], 0.0);
    assert_eq!(spd_log(&SymmetricTensor::identity(3)).unwrap().norm(), 0.0);
}

#[test]
fn log_rejects_non_spd() {
    let s = SymmetricTensor::diag(&[1.0, -1.0, 2.0]).unwrap();
    assert!(matches!(spd_log(&s), Err(Error::NotSpd { .. })));
    let bad = SquareMatrix::diag(&[1.0, f64::NAN]).unwrap();
    assert!(matches!(sym_eig(&SymmetricTensor::symmetrize(&bad)), Err(Error::InvalidInput(_))));
}

#[test]
fn stretches_of_fixtures() {
    let f = SquareMatrix::diag(&[E.powi(8), E.powi(2)]).unwrap();
    let u = right_stretch(&f).unwrap();
    assert_relative_eq!(u[(0, 0)], E.powi(8), max_relative = 1e-14);
    assert_relative_eq!(u[(1, 1)], E.powi(2), max_relative = 1e-14);
    assert!(matches!(right_stretch(&SquareMatrix::diag(&[1.0, -1.0]).unwrap()), Err(Error::Orientation { .. })));

    let u1 = SquareMatrix::diag(&[E, E, E.powi(-2)]).unwrap();
    let d = deviatoric(&spd_log(&right_stretch(&u1).unwrap()).unwrap());
    for (k, v) in [1.0, 1.0, -2.0].iter().enumerate() {
        assert_relative_eq!(d[(k, k)], *v, epsilon = 1e-14);
    }
    let s3 = 3f64.sqrt();
    let already = SymmetricTensor::diag(&[s3, 0.0, -s3]).unwrap();
    assert_eq!(*deviatoric(&already).matrix(), *already.matrix());
}

#[test]
fn rank_one_cofactor_vanishes_in_3d() {
    let a = Vector::new(&[1.0, -2.0, 0.5]).unwrap();
    let b = Vector::new(&[0.3, 4.0, -1.0]).unwrap();
    assert!(cofactor(&a.outer(&b)).norm() <= 1e-15);
    assert_eq!(cofactor(&SquareMatrix::identity(3)), SquareMatrix::identity(3));
}

#[test]
fn rotation_fixtures() {
    let axis = Vector::new(&[0.0, 5.0, 2.0]).unwrap().normalized().unwrap();
    let q = rotation_about_axis(&axis, FRAC_PI_2).unwrap();
    let expected = [[0.0, -2.0, 5.0], [2.0, 25.0, 10.0], [-5.0, 10.0, 4.0]];
    for i in 0..3 {
        for j in 0..3 {
            let scale = if j == 0 || i == 0 { 29f64.sqrt() } else { 29.0 };
            assert_relative_eq!(q[(i, j)], expected[i][j] / scale, epsilon = 1e-14);
        }
    }
    let e3 = Vector::basis(3, 2).normalized().unwrap();
    let planar = rotation_about_axis(&e3, FRAC_PI_2).unwrap();
    let expected = SquareMatrix::from_rows(&[[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
    assert!((planar - expected).norm() <= 1e-15);
    assert!((rotation_about_axis(&e3, 0.0).unwrap() - SquareMatrix::identity(3)).norm() == 0.0);
}

#[test]
fn graded_svd_keeps_small_singular_values() {
    let f = SquareMatrix::diag(&[1.0, E.powi(20), E.powi(15)]).unwrap();
    let mut s = singular_system(&f).unwrap().values().to_vec();
    s.sort_by(f64::total_cmp);
    assert_relative_eq!(s[0], 1.0, max_relative = 1e-14);
    assert_relative_eq!(s[1], E.powi(15), max_relative = 1e-14);
    assert_relative_eq!(s[2], E.powi(20), max_relative = 1e-14);
}
