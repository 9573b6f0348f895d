mod common;

use common::{mat7, symmetric_traceless, vec7};
use g2flow::g2algebra::{
    cross, diamond, hodge_star_3, hodge_star_4, interior_psi, matrix_action, metric_from_form, standard_tables,
    validate_tables, Form3, Form4, Mat7, Vec7, NCOMP, ORIENTATION,
};
use g2flow::tolerances::POINTWISE_IDENTITY_TOL;
use g2flow::Error;
use proptest::prelude::*;

fn e(i: usize) -> Vec7 {
    Vec7::basis(i)
}

#[test]
fn phi_table_entries() {
    let t = standard_tables();
    assert_eq!(t.phi[0][1][2], 1);
    assert_eq!(t.phi[1][2][0], 1);
    assert_eq!(t.phi[1][0][2], -1);
    for k in 0..7 {
        assert_eq!(t.phi[0][0][k], 0);
    }
    let nonzero = t.phi.iter().flatten().flatten().filter(|&&v| v != 0).count();
    assert_eq!(nonzero, 42);
}

#[test]
fn psi_has_168_unit_entries() {
    let t = standard_tables();
    let entries: Vec<i8> = t.psi.iter().flatten().flatten().flatten().copied().filter(|&v| v != 0).collect();
    assert_eq!(entries.len(), 168);
    assert!(entries.iter().all(|v| v.abs() == 1));
}

#[test]
fn every_identity_holds_exactly() {
    let report = validate_tables(standard_tables());
    assert_eq!(report.checks.len(), 18);
    assert!(report.all_zero(), "{report}");
    let text = report.to_string();
    assert!(text.contains("phi_ijk phi_ijk = 42"));
}

#[test]
fn full_contractions() {
    let t = standard_tables();
    let mut phi2 = 0i64;
    let mut psi_row = [[0i64; 7]; 7];
    let mut mixed = [0i64; 7];
    for i in 0..7 {
        for j in 0..7 {
            for k in 0..7 {
                phi2 += (t.phi[i][j][k] as i64).pow(2);
                for a in 0..7 {
                    mixed[a] += (t.phi[i][j][k] * t.psi[a][i][j][k]) as i64;
                    for l in 0..7 {
                        psi_row[i][a] += (t.psi[i][j][k][l] * t.psi[a][j][k][l]) as i64;
                    }
                }
            }
        }
    }
    assert_eq!(phi2, 42);
    assert_eq!(mixed, [0; 7]);
    for i in 0..7 {
        for a in 0..7 {
            assert_eq!(psi_row[i][a], if i == a { 24 } else { 0 });
        }
    }
}

#[test]
fn cross_examples() {
    let t = standard_tables();
    assert_eq!(cross(t, &e(0), &e(0)), Vec7::ZERO);
    assert_eq!(cross(t, &e(0), &e(1)), e(2));
    assert_eq!(t.phi_form().cross(&e(0), &e(1)), e(2));
}

#[test]
fn diamond_examples() {
    let t = standard_tables();
    let phi = t.phi_form();
    let three = diamond(t, &Mat7::identity(), phi).unwrap();
    assert!((three - *phi * 3.0).max_abs() < 1e-15);
    assert_eq!(diamond(t, &Mat7::ZERO, phi).unwrap(), Form3::ZERO);
    let mut h = Mat7::ZERO;
    h.0[0][0] = 1.0;
    let d = diamond(t, &h, phi).unwrap();
    assert_eq!(d.get(0, 1, 2), 1.0);
}

#[test]
fn diamond_rejects_asymmetric_input() {
    let t = standard_tables();
    let mut h = Mat7::ZERO;
    h.0[0][1] = 1.0;
    assert!(matches!(diamond(t, &h, t.phi_form()), Err(Error::NotSymmetric { .. })));
}

#[test]
fn interior_psi_examples() {
    let t = standard_tables();
    assert_eq!(interior_psi(t, &Vec7::ZERO), Form3::ZERO);
    let a = interior_psi(t, &e(0));
    let b = interior_psi(t, &e(1));
    assert!((a.inner(&a) - 4.0).abs() < 1e-14);
    assert!(a.inner(&b).abs() < 1e-14);
}

#[test]
fn hodge_examples() {
    let t = standard_tables();
    assert_eq!(hodge_star_3(t.phi_form()), *t.psi_form());
    assert_eq!(hodge_star_4(t.psi_form()), *t.phi_form());
    let s = hodge_star_3(&Form3::basis(0, 1, 2));
    assert_eq!(s, Form4::basis(3, 4, 5, 6) * ORIENTATION as f64);
}

#[test]
fn reference_metric_is_identity() {
    let g = metric_from_form(standard_tables().phi_form()).unwrap();
    assert!((g - Mat7::identity()).max_abs() < 1e-14);
}

#[test]
fn scaled_form_has_scaled_metric() {
    let phi = *standard_tables().phi_form() * 8.0;
    let g = metric_from_form(&phi).unwrap();
    assert!((g - Mat7::diagonal(4.0)).max_abs() < 1e-12);
}

#[test]
fn zero_form_is_degenerate() {
    assert!(matches!(metric_from_form(&Form3::ZERO), Err(Error::DegenerateForm { .. })));
}

fn form3() -> impl Strategy<Value = Form3> {
    prop::collection::vec(-1.0f64..1.0, NCOMP).prop_map(|v| {
        let mut f = Form3::ZERO;
        f.0.copy_from_slice(&v);
        f
    })
}

proptest! {
    #[test]
    fn cross_is_antisymmetric(x in vec7(), y in vec7()) {
        let phi = standard_tables().phi_form();
        prop_assert!((phi.cross(&x, &y) + phi.cross(&y, &x)).max_abs() < POINTWISE_IDENTITY_TOL);
    }

    #[test]
    fn cross_is_orthogonal_to_factors(x in vec7(), y in vec7()) {
        let c = standard_tables().phi_form().cross(&x, &y);
        prop_assert!(c.dot(&x).abs() < POINTWISE_IDENTITY_TOL);
        prop_assert!(c.dot(&y).abs() < POINTWISE_IDENTITY_TOL);
    }

    #[test]
    fn cross_norm_identity(x in vec7(), y in vec7()) {
        let t = standard_tables();
        let c = t.phi_form().cross(&x, &y);
        let psi_term = t.psi_form().double_interior(&x, &y).mul_vec(&x).dot(&y);
        let rhs = x.norm2() * y.norm2() - x.dot(&y).powi(2) - psi_term;
        prop_assert!((c.norm2() - rhs).abs() < POINTWISE_IDENTITY_TOL);
        prop_assert!((c.norm2() + x.dot(&y).powi(2) - x.norm2() * y.norm2()).abs() < POINTWISE_IDENTITY_TOL);
    }

    #[test]
    fn hodge_star_is_an_involution(a in form3()) {
        prop_assert!((hodge_star_4(&hodge_star_3(&a)) - a).max_abs() < 1e-15);
    }

    #[test]
    fn hodge_star_is_an_isometry(a in form3()) {
        prop_assert!((hodge_star_3(&a).norm2() - a.norm2()).abs() < 1e-13);
    }

    #[test]
    fn diamond_is_linear(h in symmetric_traceless(), k in symmetric_traceless(), s in -2.0f64..2.0) {
        let t = standard_tables();
        let phi = t.phi_form();
        let lhs = diamond(t, &(h + k * s), phi).unwrap();
        let rhs = diamond(t, &h, phi).unwrap() + diamond(t, &k, phi).unwrap() * s;
        prop_assert!((lhs - rhs).max_abs() < 1e-13);
    }

    #[test]
    fn traceless_symmetric_action_is_orthogonal_to_seven_dim_part(h in symmetric_traceless(), x in vec7()) {
        let t = standard_tables();
        let a = diamond(t, &h, t.phi_form()).unwrap();
        prop_assert!(a.inner(&interior_psi(t, &x)).abs() < 1e-13);
        prop_assert!(a.inner(t.phi_form()).abs() < 1e-13);
    }

    #[test]
    fn interior_psi_inner_product(x in vec7(), y in vec7()) {
        let t = standard_tables();
        let ip = interior_psi(t, &x).inner(&interior_psi(t, &y));
        prop_assert!((ip - 4.0 * x.dot(&y)).abs() < 1e-13);
    }

    #[test]
    fn skew_action_is_minus_three_interior_psi(x in vec7()) {
        let t = standard_tables();
        let skew = t.phi_form().interior(&x);
        let lhs = matrix_action(&skew, t.phi_form());
        prop_assert!((lhs + interior_psi(t, &x) * 3.0).max_abs() < 1e-13);
    }

    #[test]
    fn mat7_inverse(m in mat7()) {
        let a = m + Mat7::diagonal(8.0);
        let inv = a.inverse().unwrap();
        prop_assert!((a.matmul(&inv) - Mat7::identity()).max_abs() < 1e-12);
    }
}
