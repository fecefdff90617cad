use std::f64::consts::PI;

use proptest::prelude::*;
use qgeo::geometry::{check_partials, gauge_factor, HamiltonianField};
use qgeo::models::*;
use qgeo::oracle::{qgt_fd, FdScheme, FdSpec};
use qgeo::su2::{ground_state, Vec3};
use qgeo::QgeoError;

/// g_θθ for an orthogonal probe, written directly from the unregularized
/// expression with ξ = 1 + r² + 2r cosθ.
fn g_theta_oracle(theta: f64, r: f64, t: f64) -> f64 {
    let xi = 1.0 + r * r + 2.0 * r * theta.cos();
    let s = theta.sin();
    let sn = (t * xi.sqrt()).sin();
    t * t * r * r * s * s / xi + (1.0 + r * theta.cos()).powi(2) * sn * sn / (xi * xi)
}

fn richardson() -> FdSpec {
    FdSpec::new(1e-4, FdScheme::Richardson).unwrap()
}

#[test]
fn field_examples() {
    let f = canonical_field(1.0);
    assert!(f.eval(&[PI, 0.3, 1.0]).unwrap().norm() < 1e-15);
    assert!(f.eval(&[PI / 2.0, 0.0, 0.0]).unwrap().max_abs_diff(Vec3::new(2.0, 0.0, 0.0)) < 1e-15);
    let s = ssh_field();
    assert!(s.eval(&[0.7, 0.7, PI]).unwrap().norm() < 1e-15);
    assert!(s.eval(&[0.0, 1.0, PI / 2.0]).unwrap().max_abs_diff(Vec3::new(0.0, 2.0, 0.0)) < 1e-15);
}

#[test]
fn parameter_checks() {
    assert!(CanonicalParams::new(3.5, 0.0, 1.0).is_err());
    assert!(CanonicalParams::new(1.0, 7.0, 1.0).is_err());
    assert!(SshParams::new(-0.1, 1.0, 0.0).is_err());
    assert!(SshParams::new(1.0, 1.0, 4.0).is_err());
    assert!(CanonicalParams::new(PI, 0.0, 1.0).unwrap().is_tpt(1e-9));
    assert!(!CanonicalParams::new(PI, 0.0, 1.1).unwrap().is_tpt(1e-9));
    assert!(SshParams::new(1.0, 1.0, -PI).unwrap().is_tpt(1e-9));
}

#[test]
fn inset_values() {
    for (x, want) in [(PI, 100.0), (PI - 0.1, 99.9271), (PI - 0.5, 94.1155)] {
        let g = max_qmt_canonical(&CanonicalParams { theta: x, phi: 0.0, r: 1.0, h0: 1.0 }, 10.0).unwrap();
        assert!((g[0] - want).abs() < 5e-4);
        let g = max_qmt_ssh(&SshParams { v: 1.0, w: 1.0, k: x }, 10.0).unwrap();
        assert!((g[2] - want).abs() < 5e-4);
    }
}

#[test]
fn exact_transition_is_degenerate_for_ground_matrices() {
    let p = CanonicalParams::new(PI, 0.0, 1.0).unwrap();
    assert!(matches!(ground_qmt_matrix_canonical(&p, 10.0), Err(QgeoError::Degenerate(_))));
    assert!(ground_berry_matrix_canonical(&p, 10.0).is_err());
    assert!(ground_qmt_matrix_ssh(&SshParams::new(1.0, 1.0, PI).unwrap(), 10.0).is_err());
}

#[test]
fn berry_entry_magnitude_at_unit_xi() {
    for t in [0.3, 1.0, 7.0, 10.0] {
        let p = CanonicalParams { theta: PI / 2.0, phi: 0.4, r: 0.0, h0: 1.0 };
        let om = ground_berry_matrix_canonical(&p, t).unwrap();
        let want = 2.0 * t.sin().powi(2);
        assert!((om[(0, 1)].abs() - want).abs() < 1e-12);
        assert_eq!(om[(0, 2)], 0.0);
        assert_eq!(om[(0, 1)], -om[(1, 0)]);
    }
}

#[test]
fn berry_sign_follows_the_oracle() {
    let f = canonical_field(1.0);
    let p = CanonicalParams { theta: 2.0, phi: 1.0, r: 0.5, h0: 1.0 };
    let probe = ground_state(f.eval(&p.point()).unwrap()).unwrap();
    let chi = qgt_fd(&f, &p.point(), &probe, 10.0, richardson()).unwrap();
    let om = ground_berry_matrix_canonical(&p, 10.0).unwrap();
    assert!((om[(0, 1)] + 2.0 * chi[(0, 1)].im).abs() < 1e-8);
    assert!((om[(1, 2)] + 2.0 * chi[(1, 2)].im).abs() < 1e-8);
}

#[test]
fn qmt_matrix_off_diagonal_sign() {
    let f = canonical_field(1.0);
    let p = CanonicalParams { theta: 2.0, phi: 1.0, r: 0.5, h0: 1.0 };
    let probe = ground_state(f.eval(&p.point()).unwrap()).unwrap();
    let chi = qgt_fd(&f, &p.point(), &probe, 10.0, richardson()).unwrap();
    let g = ground_qmt_matrix_canonical(&p, 10.0).unwrap();
    let printed = ground_qmt_matrix_canonical_printed(&p, 10.0).unwrap();
    assert!((g - g.transpose()).amax() == 0.0);
    assert!((g[(0, 2)] - chi[(0, 2)].re).abs() < 1e-8);
    assert!((g[(0, 2)] - -0.0865210683).abs() < 1e-9);
    // The printed (r, θ) entry carries the opposite sign.
    assert!((printed[(2, 0)] + chi[(2, 0)].re).abs() < 1e-8);
    assert_eq!(printed[(0, 2)], g[(0, 2)]);
}

#[test]
fn ssh_ground_entry_example() {
    for t in [0.5, 3.0, 10.0] {
        let g = ground_qmt_matrix_ssh(&SshParams { v: 0.0, w: 1.0, k: PI / 2.0 }, t).unwrap();
        assert!((g[(0, 0)] - t.sin().powi(2)).abs() < 1e-12);
        assert_eq!(ground_berry_matrix_ssh(&SshParams { v: 0.0, w: 1.0, k: PI / 2.0 }, t).unwrap().amax(), 0.0);
    }
}

#[test]
fn ground_limit_along_the_diagonal_path() {
    // Approaching with θ = π − ε, r = 1 − ε splits T² evenly between the two
    // transition parameters; only their sum reaches T².
    let eps = 1e-6;
    for t in [5.0, 10.0, 50.0] {
        let t2: f64 = t * t;
        let g = ground_qmt_matrix_canonical(&CanonicalParams { theta: PI - eps, phi: 0.0, r: 1.0 - eps, h0: 1.0 }, t)
            .unwrap();
        assert!((g[(0, 0)] / t2 - 0.5).abs() < 1e-3);
        assert!((g[(2, 2)] / t2 - 0.5).abs() < 1e-3);
        assert!(g[(1, 1)].abs() < 1e-9 * t2);
        let g = ground_qmt_matrix_ssh(&SshParams { v: 1.0 - eps, w: 1.0, k: PI - eps }, t).unwrap();
        for i in 0..3 {
            assert!((g[(i, i)] / t2 - 0.5).abs() < 1e-3, "{g}");
        }
    }
}

#[test]
fn ground_limit_along_single_parameter_slices() {
    let eps = 1e-6;
    let t: f64 = 10.0;
    // G_θθ ≈ T² a²/(a² + b²) and G_rr ≈ T² b²/(a² + b²) with a = 1 − r, b = π − θ.
    let g = ground_qmt_matrix_canonical(&CanonicalParams { theta: PI, phi: 0.0, r: 1.0 - eps, h0: 1.0 }, t).unwrap();
    assert!((g[(0, 0)] / (t * t) - 1.0).abs() < 1e-3);
    let g = ground_qmt_matrix_canonical(&CanonicalParams { theta: PI - eps, phi: 0.0, r: 1.0, h0: 1.0 }, t).unwrap();
    assert!((g[(2, 2)] / (t * t) - 1.0).abs() < 1e-3);
    // Same structure for SSH with a = w − v, b = π − k.
    let g = ground_qmt_matrix_ssh(&SshParams { v: 1.0 - eps, w: 1.0, k: PI }, t).unwrap();
    assert!((g[(2, 2)] / (t * t) - 1.0).abs() < 1e-3);
    let g = ground_qmt_matrix_ssh(&SshParams { v: 1.0, w: 1.0, k: PI - eps }, t).unwrap();
    assert!((g[(0, 0)] / (t * t) - 1.0).abs() < 1e-3);
}

#[test]
fn chern_closed_form_and_quadrature() {
    assert_eq!(coarse_chern_canonical(0.5).unwrap().abs(), 2.0);
    assert_eq!(coarse_chern_canonical(1.5).unwrap(), 0.0);
    assert!(matches!(coarse_chern_canonical(1.0), Err(QgeoError::TransitionPoint(_))));
    for (r, want) in [(0.5, 2.0), (1.5, 0.0), (-0.5, 2.0)] {
        let c = coarse_chern_canonical_quadrature(r, Default::default()).unwrap();
        assert!((c.value.abs() - want).abs() < 1e-3, "{r}: {c:?}");
        assert!(c.converged);
    }
    // Printed form gives 2 for r < −1 while the quadrature gives 0.
    assert_eq!(coarse_chern_canonical(-1.5).unwrap(), 2.0);
    assert!(coarse_chern_canonical_quadrature(-1.5, Default::default()).unwrap().value.abs() < 1e-3);
}

#[test]
fn printed_kk_variant() {
    let p = SshParams { v: 0.4, w: 1.0, k: 2.0 };
    assert!((max_qmt_ssh(&p, 10.0).unwrap()[2] - max_qmt_ssh_kk_printed(&p, 10.0).unwrap()).abs() < 1e-12);
    let p = SshParams { v: 0.4, w: 2.0, k: 2.0 };
    let g = max_qmt_ssh(&p, 10.0).unwrap()[2];
    let y = gauge_factor(&ssh_field(), &p.point(), 2, 10.0).unwrap().magnitude;
    assert!((g - y * y / 4.0).abs() < 1e-9 * g);
    assert!((g - max_qmt_ssh_kk_printed(&p, 10.0).unwrap()).abs() > 1e-3);
}

#[test]
fn tpt_model_helpers() {
    let c = TptModel::Canonical { phi0: 0.0, h0: 1.0 };
    assert_eq!(c.critical(), [PI, 1.0]);
    assert_eq!(c.peak_reference(10.0), 100.0);
    assert_eq!(c.phase([1.0, 0.5]), Some(-2));
    assert_eq!(c.phase([1.0, 1.0]), None);
    let s = TptModel::Ssh { w0: 1.5 };
    assert_eq!(s.peak_reference(10.0), 225.0);
    assert_eq!(s.phase([1.0, 0.5]), Some(1));
    assert_eq!(s.phase([1.0, 2.0]), Some(0));
    assert!(!s.in_domain([4.0, 0.5]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn canonical_partials(theta in 0.0..PI, phi in 0.0..2.0 * PI, r in -2.0..2.0f64, h0 in 0.5..2.0f64) {
        prop_assert!(check_partials(&canonical_field(h0), &[theta, phi, r], 1e-5).unwrap() <= 1e-8);
    }

    #[test]
    fn ssh_partials(v in 0.0..2.0f64, w in 0.0..2.0f64, k in -PI..PI) {
        prop_assert!(check_partials(&ssh_field(), &[v, w, k], 1e-5).unwrap() <= 1e-8);
    }

    #[test]
    fn max_qmt_is_quarter_gauge_norm(theta in 0.05..3.1f64, phi in 0.0..6.2f64, r in 0.0..2.0f64, t in 0.5..20.0f64) {
        let p = CanonicalParams { theta, phi, r, h0: 1.0 };
        let g = max_qmt_canonical(&p, t).unwrap();
        let f = canonical_field(1.0);
        for (l, gl) in g.iter().enumerate() {
            let y = gauge_factor(&f, &p.point(), l, t).unwrap().magnitude;
            prop_assert!((gl - y * y / 4.0).abs() <= 1e-9 * (1.0 + gl));
        }
        prop_assert!((g[0] - g_theta_oracle(theta, r, t)).abs() <= 1e-9 * (1.0 + g[0]));
    }

    #[test]
    fn ssh_max_qmt_is_quarter_gauge_norm(v in 0.05..2.0f64, w in 0.05..2.0f64, k in -3.1..3.1f64, t in 0.5..20.0f64) {
        let p = SshParams { v, w, k };
        let g = max_qmt_ssh(&p, t).unwrap();
        for (l, gl) in g.iter().enumerate() {
            let y = gauge_factor(&ssh_field(), &p.point(), l, t).unwrap().magnitude;
            prop_assert!((gl - y * y / 4.0).abs() <= 1e-9 * (1.0 + gl));
        }
    }

    #[test]
    fn bound_chain(theta in 0.05..3.1f64, phi in 0.0..6.2f64, r in 0.0..2.0f64, t in 0.5..20.0f64,
                   v in 0.05..2.0f64, w in 0.05..2.0f64, k in -3.1..3.1f64) {
        let p = CanonicalParams { theta, phi, r, h0: 1.0 };
        prop_assume!(1.0 + r * r + 2.0 * r * theta.cos() > 1e-6);
        let g = ground_qmt_matrix_canonical(&p, t).unwrap();
        let m = max_qmt_canonical(&p, t).unwrap();
        let f = canonical_field(1.0);
        for l in 0..3 {
            let cap = t * t * f.partial(&p.point(), l).unwrap().norm_sq() / 4.0;
            prop_assert!(g[(l, l)] <= m[l] * (1.0 + 1e-12) + 1e-12);
            prop_assert!(m[l] <= cap * (1.0 + 1e-12) + 1e-12);
        }
        let q = SshParams { v, w, k };
        prop_assume!(v * v + w * w + 2.0 * v * w * k.cos() > 1e-6);
        let g = ground_qmt_matrix_ssh(&q, t).unwrap();
        let m = max_qmt_ssh(&q, t).unwrap();
        for l in 0..3 {
            let cap = t * t * ssh_field().partial(&q.point(), l).unwrap().norm_sq() / 4.0;
            prop_assert!(g[(l, l)] <= m[l] * (1.0 + 1e-12) + 1e-12);
            prop_assert!(m[l] <= cap * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn theta_r_curvature_vanishes(theta in 0.05..3.1f64, phi in 0.0..6.2f64, r in 0.0..2.0f64, t in 0.5..20.0f64) {
        let p = CanonicalParams { theta, phi, r, h0: 1.0 };
        prop_assume!(1.0 + r * r + 2.0 * r * theta.cos() > 1e-6);
        let om = ground_berry_matrix_canonical(&p, t).unwrap();
        prop_assert_eq!(om[(0, 2)], 0.0);
        prop_assert_eq!(om[(2, 0)], 0.0);
    }
}
