use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qgeo::geometry::HamiltonianField;
use qgeo::models::{canonical_field, ssh_field};
use qgeo::su2::{bloch, evolve, ground_state, state_from_bloch, QubitState, Unitary2, Vec3};
use std::f64::consts::PI;

/// exp(−iT X·σ/2) summed as a power series until terms stop contributing.
fn series_exp(x: Vec3, t: f64) -> [[C64; 2]; 2] {
    let i = C64::new(0.0, 1.0);
    let a = [
        [-i * t * 0.5 * x.z, -i * t * 0.5 * C64::new(x.x, -x.y)],
        [-i * t * 0.5 * C64::new(x.x, x.y), i * t * 0.5 * x.z],
    ];
    let mut sum = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]];
    let mut term = sum;
    for n in 1..200 {
        let mut next = [[C64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                next[r][c] = (term[r][0] * a[0][c] + term[r][1] * a[1][c]) / n as f64;
            }
        }
        term = next;
        for r in 0..2 {
            for c in 0..2 {
                sum[r][c] += term[r][c];
            }
        }
        if term.iter().flatten().all(|z| z.norm() < 1e-18) {
            break;
        }
    }
    sum
}

fn unit_vec() -> impl Strategy<Value = Vec3> {
    (0.0..PI, 0.0..2.0 * PI).prop_map(|(a, b)| Vec3::new(a.sin() * b.cos(), a.sin() * b.sin(), a.cos()))
}

fn field() -> impl Strategy<Value = Vec3> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unitarity_defect(u: &Unitary2) -> f64 {
    u.mul(&u.dagger()).max_abs_diff(&Unitary2::identity())
}

#[test]
fn zero_field_gives_identity() {
    assert_eq!(evolve(Vec3::ZERO, 10.0).unwrap(), Unitary2::identity());
}

#[test]
fn z_rotation_quarter_turn() {
    let u = evolve(Vec3::new(0.0, 0.0, 2.0), PI / 2.0).unwrap();
    assert!((u.m[0][0] - C64::new(0.0, -1.0)).norm() < 1e-15);
    assert!((u.m[1][1] - C64::new(0.0, 1.0)).norm() < 1e-15);
    assert!(u.m[0][1].norm() < 1e-15 && u.m[1][0].norm() < 1e-15);
}

#[test]
fn rejects_non_finite_and_negative_time() {
    assert!(evolve(Vec3::new(f64::NAN, 0.0, 0.0), 1.0).is_err());
    assert!(evolve(Vec3::new(1.0, 0.0, 0.0), -1.0).is_err());
    assert!(ground_state(Vec3::ZERO).is_err());
    assert!(state_from_bloch(Vec3::new(0.5, 0.0, 0.0)).is_err());
    assert!(QubitState::new(C64::new(1.0, 0.0), C64::new(1.0, 0.0)).is_err());
}

#[test]
fn ground_state_examples() {
    let s = ground_state(Vec3::new(0.0, 0.0, 1.0)).unwrap();
    assert_eq!(s, QubitState::zero());
    let canon = canonical_field(1.0).eval(&[PI / 2.0, 0.0, 0.0]).unwrap();
    let ssh = ssh_field().eval(&[1.0, 0.0, 1.3]).unwrap();
    for x in [canon, ssh] {
        assert!(ground_state(x).unwrap().bloch().max_abs_diff(Vec3::new(1.0, 0.0, 0.0)) < 1e-15);
    }
}

#[test]
fn bloch_examples() {
    assert_eq!(bloch(&QubitState::zero()), Vec3::new(0.0, 0.0, 1.0));
    let plus = state_from_bloch(Vec3::new(1.0, 0.0, 0.0)).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((plus.amp0() - C64::new(h, 0.0)).norm() < 1e-15);
    assert!((plus.amp1() - C64::new(h, 0.0)).norm() < 1e-15);
}

#[test]
fn canonical_phase() {
    let s = QubitState::normalized(C64::new(0.0, 2.0), C64::new(1.0, 1.0)).unwrap();
    assert_eq!(s.amp0().im, 0.0);
    assert!(s.amp0().re > 0.0);
    let s = QubitState::normalized(C64::new(0.0, 0.0), C64::new(0.0, -3.0)).unwrap();
    assert_eq!(s.amp1(), C64::new(1.0, 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matches_power_series(x in field(), t in 0.0..5.0f64) {
        let u = evolve(x, t).unwrap();
        let s = series_exp(x, t);
        // The series cancels terms as large as e^{|X|T/2}.
        let tol = 1e-12 + 1e-15 * (0.5 * x.norm() * t).exp();
        for r in 0..2 {
            for c in 0..2 {
                prop_assert!((u.m[r][c] - s[r][c]).norm() <= tol);
            }
        }
    }

    #[test]
    fn group_action(x in field(), t1 in 0.0..10.0f64, t2 in 0.0..10.0f64) {
        let a = evolve(x, t1).unwrap().mul(&evolve(x, t2).unwrap());
        prop_assert!(a.max_abs_diff(&evolve(x, t1 + t2).unwrap()) <= 1e-12);
    }

    #[test]
    fn unitary_with_unit_determinant(x in field(), t in 0.0..50.0f64) {
        let u = evolve(x, t).unwrap();
        prop_assert!(unitarity_defect(&u) <= 1e-12);
        prop_assert!((u.det().norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ground_state_is_plus_eigenvector(x in field()) {
        prop_assume!(x.norm() > 1e-6);
        let s = ground_state(x).unwrap();
        let (a, b) = (s.amp0(), s.amp1());
        // (X·σ/2) applied to the state.
        let h0 = 0.5 * (x.z * a + C64::new(x.x, -x.y) * b);
        let h1 = 0.5 * (C64::new(x.x, x.y) * a - x.z * b);
        let e = 0.5 * x.norm();
        prop_assert!((h0 - e * a).norm() <= 1e-12 * (1.0 + x.norm()));
        prop_assert!((h1 - e * b).norm() <= 1e-12 * (1.0 + x.norm()));
    }

    #[test]
    fn bloch_round_trip(r in unit_vec()) {
        let s = state_from_bloch(r).unwrap();
        prop_assert!(((s.amp0().norm_sqr() + s.amp1().norm_sqr()) - 1.0).abs() <= 1e-12);
        prop_assert!(bloch(&s).max_abs_diff(r) <= 1e-12);
    }

    #[test]
    fn state_round_trip_up_to_phase(a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64, d in -1.0..1.0f64) {
        prop_assume!(a * a + b * b + c * c + d * d > 1e-3);
        let s = QubitState::normalized(C64::new(a, b), C64::new(c, d)).unwrap();
        let back = state_from_bloch(s.bloch()).unwrap();
        let overlap = s.amp0().conj() * back.amp0() + s.amp1().conj() * back.amp1();
        prop_assert!((overlap.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn pow_is_repeated_evolution(x in field(), n in 1u64..64) {
        let dt = 0.37;
        let u = evolve(x, dt).unwrap().pow(n);
        prop_assert!(u.max_abs_diff(&evolve(x, dt * n as f64).unwrap()) <= 1e-11);
    }
}
