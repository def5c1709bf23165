use gll_core::geom::{FlowParams, SpherePoint, TangentVec, Vec3};
use gll_core::hasimoto::{self, FRAME_TOL};
use gll_core::radial_pde::{self as pde, RadialField, RadialGrid};
use num_complex::Complex64 as C;
use num_rational::Rational64;
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

/// Polar angle amp·r·e^{−(r/w)²} (odd) and azimuth c r² (even).
fn twisted(grid: &RadialGrid, amp: f64, w: f64, c: f64) -> RadialField {
    RadialField::from_fn(grid, 0.0, |r| {
        let a = amp * r * (-(r / w).powi(2)).exp();
        let phi = c * r * r;
        SpherePoint::normalize(Vec3::new(a.sin() * phi.cos(), a.sin() * phi.sin(), a.cos())).unwrap()
    })
    .unwrap()
}

fn flow() -> impl Strategy<Value = FlowParams> {
    (1u32..4, 0.0f64..FRAC_PI_2, any::<bool>())
        .prop_map(|(n, t, s)| FlowParams::new(n, t.cos(), if s { t.sin() } else { -t.sin() }).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn frame_is_orthonormal_and_q_is_an_isometry(amp in 0.2f64..2.5, w in 0.5f64..2.0, c in -1.5f64..1.5, seed in 0.0f64..6.28, p in flow()) {
        let grid = RadialGrid::uniform(0.01, 6.0).unwrap();
        let field = twisted(&grid, amp, w, c);
        let fr = hasimoto::transport_frame(&field, TangentVec::new(seed.cos(), seed.sin(), 0.0)).unwrap();
        prop_assert!(fr.defect(&field) <= FRAME_TOL);
        for ((e, je), u) in fr.e.iter().zip(&fr.je).zip(&field.u) {
            prop_assert!((je.norm() - 1.0).abs() <= FRAME_TOL && je.dot(&u.vec()).abs() <= FRAME_TOL);
            prop_assert!((u.vec().cross(&e.vec()) - je).norm() <= FRAME_TOL);
        }
        let q = hasimoto::compute_q(&field, &fr, &p).unwrap();
        prop_assert!(q.isometry_defect() <= FRAME_TOL);
        prop_assert_eq!(q.ag[0], 0.0);
        prop_assert!(hasimoto::pe3_coordinate_defect(&field, &fr, &q) <= 1e-3 * (1.0 + amp * amp));
    }

    #[test]
    fn seed_rotation_only_changes_the_phase_of_q(amp in 0.2f64..2.5, c in -1.5f64..1.5, theta in -3.0f64..3.0, p in flow()) {
        let grid = RadialGrid::uniform(0.02, 6.0).unwrap();
        let field = twisted(&grid, amp, 1.0, c);
        let base = hasimoto::transport_frame(&field, TangentVec::new(1.0, 0.0, 0.0)).unwrap();
        let turned = hasimoto::transport_frame(&field, TangentVec::new(theta.cos(), theta.sin(), 0.0)).unwrap();
        let expect = base.rotated(theta);
        for (a, b) in turned.e.iter().zip(&expect.e) {
            prop_assert!((a.vec() - b.vec()).norm() <= 1e-11);
        }
        let q0 = hasimoto::compute_q(&field, &base, &p).unwrap();
        let q1 = hasimoto::compute_q(&field, &turned, &p).unwrap();
        let phase = C::from_polar(1.0, -theta);
        for j in 0..q0.q.len() {
            prop_assert!((q1.q[j] - phase * q0.q[j]).norm() <= 1e-10 * (1.0 + q0.q[j].norm()));
            prop_assert!((q1.ag[j] - q0.ag[j]).abs() <= 1e-9 * (1.0 + q0.ag[j].abs()));
        }
    }

    #[test]
    fn exponent_table_is_exact(pn in 1i64..=20) {
        // p = 1 + pn/20 ∈ (1, 2].
        let p = 1.0 + pn as f64 / 20.0;
        let t = hasimoto::strichartz_exponents(p).unwrap();
        let pr = Rational64::new(20 + pn, 20);
        for &(i, j) in &hasimoto::EXPONENT_INDICES {
            let expect = Rational64::new(i + j, 4) - Rational64::from_integer(i) / (pr * 6);
            prop_assert_eq!(hasimoto::inverse_index(pr, i, j), expect);
        }
        prop_assert!(t.holder_ok);
    }
}

#[test]
fn harmonic_map_gives_the_closed_form_q() {
    let grid = RadialGrid::uniform(0.005, 8.0).unwrap();
    let field = pde::harmonic_field(&grid, [1.0, 0.0]).unwrap();
    let fr = hasimoto::transport_frame(&field, TangentVec::new(1.0, 0.0, 0.0)).unwrap();
    let q = hasimoto::compute_q(&field, &fr, &FlowParams::heat(1)).unwrap();
    let worst = q.r.iter().zip(&q.q).map(|(r, z)| (z.norm() - 2.0 / (1.0 + r * r)).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "{worst:e}");
}

#[test]
fn pe3_defect_converges_at_second_order() {
    let p = FlowParams::new(2, 0.6, 0.8).unwrap();
    let d: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dr| {
            let grid = RadialGrid::uniform(dr, 6.0).unwrap();
            let field = twisted(&grid, 1.0, 1.0, 0.7);
            let fr = hasimoto::transport_frame(&field, TangentVec::new(1.0, 0.0, 0.0)).unwrap();
            hasimoto::pe3_coordinate_defect(&field, &fr, &hasimoto::compute_q(&field, &fr, &p).unwrap())
        })
        .collect();
    for w in d.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.8, "{d:?}");
    }
}

#[test]
fn seeds_off_the_tangent_plane_are_refused() {
    let grid = RadialGrid::uniform(0.1, 2.0).unwrap();
    let field = twisted(&grid, 1.0, 1.0, 0.0);
    assert!(hasimoto::transport_frame(&field, TangentVec::new(0.0, 0.0, 1.0)).is_err());
    assert!(hasimoto::transport_frame(&field, TangentVec::new(2.0, 0.0, 0.0)).is_err());
    assert!(hasimoto::strichartz_exponents(2.5).is_err());
}

#[test]
fn coordinate_eigenfunctions_hold_in_every_dimension() {
    for n in 1..=4 {
        let rep = hasimoto::eigenfunction_check(n, 50, 9).unwrap();
        assert!(rep.max_eigen_defect <= 1e-10 && rep.lapw_defect <= 1e-8, "n = {n}: {rep:?}");
    }
}
