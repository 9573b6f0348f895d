mod common;

use std::f64::consts::PI;

use common::{grid, state};
use g2flow::bryant::IsometricState;
use g2flow::diagnostics::{
    convexity_defect, decay_rate, energy, entropy, interpolation_monitor, kernel_mass, monotonicity_residual,
    shi_quantities, sup_gradient, sup_torsion, theta, DecayFit, DiagnosticsRecord, DoublingMonitor, EntropySampling,
    EventKind, HeatKernelSpec,
};
use g2flow::flow::{evolve_fx, Integrator};
use g2flow::g2algebra::Mat7;
use g2flow::grid::{Field, Grid, MatrixField};
use g2flow::tolerances::KERNEL_MASS_TOL;
use g2flow::Error;
use proptest::prelude::*;

fn center(x: f64, y: f64) -> [f64; 7] {
    [x, y, 0.0, 0.0, 0.0, 0.0, 0.0]
}

fn uniform(g: &Grid, c: f64) -> MatrixField {
    let mut m = Mat7::ZERO;
    m.0[2][3] = c.sqrt();
    Field::constant(g, m)
}

fn sine_torsion(g: &Grid, amp: f64) -> MatrixField {
    let l = g.period();
    Field::from_fn(g, |c| {
        let mut m = Mat7::ZERO;
        m.0[0][1] = amp * (2.0 * PI * c[0] / l).sin();
        m
    })
}

fn record(t: f64, sup_t: f64, div_t_l2: f64) -> DiagnosticsRecord {
    DiagnosticsRecord {
        t,
        energy: 0.0,
        sup_t,
        div_t_l2,
        constraint_defect: 0.0,
        events: Vec::new(),
        theta: Vec::new(),
        entropy_estimate: None,
        shi_quantities: None,
        phi_discrepancy: None,
        frame_defect: None,
    }
}

const SAMPLING: EntropySampling = EntropySampling { scales: 4, stride: 4 };

#[test]
fn kernel_has_unit_mass() {
    let g = grid(32);
    for (t0, c) in [(0.01, center(0.5, 0.5)), (0.2, center(0.13, 0.9)), (0.5, center(0.0, 0.0))] {
        let spec = HeatKernelSpec::new(c, t0);
        assert!((kernel_mass(&spec, &g, 0.0).unwrap() - 1.0).abs() < 1e-13);
        let wide = HeatKernelSpec { image_radius: 8, ..spec.clone() };
        assert!(wide.mass_defect(&g, 0.0).unwrap() <= KERNEL_MASS_TOL, "t0 = {t0}");
        assert!(wide.mass_defect(&g, 0.0).unwrap() <= spec.mass_defect(&g, 0.0).unwrap());
    }
    let local = HeatKernelSpec::new(center(0.5, 0.5), 1.0 / 64.0);
    assert!(local.mass_defect(&g, 0.0).unwrap() <= KERNEL_MASS_TOL);
}

#[test]
fn kernel_peak_concentrates_like_the_euclidean_kernel() {
    let g = grid(64);
    for tau in [0.01, 0.004] {
        let spec = HeatKernelSpec::new(center(0.5, 0.5), tau);
        let u = spec.value(&g, 0.0).unwrap();
        let p = g.point_index(&[32, 32, 0, 0, 0, 0, 0]);
        let expect = 1.0 / (4.0 * PI * tau);
        assert!((u.at(p) / expect - 1.0).abs() < 1e-8, "tau = {tau}: {}", u.at(p));
    }
}

#[test]
fn grad_f_points_away_from_the_centre() {
    let g = grid(64);
    let tau = 0.01;
    let spec = HeatKernelSpec::new(center(0.5, 0.5), tau);
    let gf = spec.grad_f(&g, 0.0).unwrap();
    for p in 0..g.npoints() {
        let c = g.coords(p);
        if (c[0] - 0.5).abs() > 0.1 || (c[1] - 0.5).abs() > 0.1 {
            continue;
        }
        let v = gf.at(p);
        for d in 0..2 {
            assert!((v[d] - (c[d] - 0.5) / (2.0 * tau)).abs() < 1e-6, "{p} {d}");
        }
        assert!((2..7).all(|d| v[d] == 0.0));
    }
}

#[test]
fn kernel_rejects_times_after_the_final_time() {
    let g = grid(8);
    let spec = HeatKernelSpec::new(center(0.0, 0.0), 0.1);
    assert!(matches!(spec.tau(0.1), Err(Error::TimeNotBeforeFinal { .. })));
    assert!(matches!(theta(&uniform(&g, 1.0), &spec, 0.2), Err(Error::TimeNotBeforeFinal { .. })));
}

#[test]
fn theta_of_special_fields() {
    let g = grid(16);
    let spec = HeatKernelSpec::new(center(0.3, 0.7), 0.5);
    assert_eq!(theta(&MatrixField::zeros(&g), &spec, 0.1).unwrap(), 0.0);
    let th = theta(&uniform(&g, 2.5), &spec, 0.1).unwrap();
    assert!((th - 2.5 * 0.4).abs() < 1e-13, "{th}");
}

#[test]
fn theta_is_scale_invariant() {
    let g = grid(16);
    let t = sine_torsion(&g, 0.7).add(&uniform(&g, 0.3));
    let spec = HeatKernelSpec::new(center(0.25, 0.5), 0.3);
    let base = theta(&t, &spec, 0.1).unwrap();
    for c in [2.0, 3.0] {
        let gc = g.with_period(c);
        let tc = t.with_grid(&gc).scaled(1.0 / c);
        let sc = HeatKernelSpec::new(spec.center.map(|x| x * c), spec.t0 * c * c);
        let th = theta(&tc, &sc, 0.1 * c * c).unwrap();
        assert!((th / base - 1.0).abs() < 1e-12, "c = {c}: {th} vs {base}");
    }
}

#[test]
fn entropy_of_special_fields() {
    let g = grid(16);
    assert_eq!(entropy(&MatrixField::zeros(&g), 0.1, &SAMPLING).value, 0.0);
    let e = entropy(&uniform(&g, 3.0), 0.1, &SAMPLING);
    assert!((e.value - 0.3).abs() < 1e-13, "{}", e.value);
    assert_eq!(e.scale, 0.1);
}

#[test]
fn entropy_is_scale_invariant() {
    let g = grid(16);
    let t = sine_torsion(&g, 0.5);
    let base = entropy(&t, 0.05, &SAMPLING);
    let c = 3.0;
    let gc = g.with_period(c);
    let scaled = entropy(&t.with_grid(&gc).scaled(1.0 / c), 0.05 * c * c, &SAMPLING);
    assert!((scaled.value / base.value - 1.0).abs() < 1e-12);
    assert_eq!(scaled.point, base.point);
}

#[test]
fn entropy_grows_with_the_scale() {
    let g = grid(16);
    let t = sine_torsion(&g, 0.5);
    let small = entropy(&t, 0.01, &SAMPLING).value;
    let large = entropy(&t, 0.04, &SAMPLING).value;
    assert!(large >= small);
}

#[test]
fn energy_of_a_single_mode() {
    let g = grid(16);
    let e = energy(&sine_torsion(&g, 1.0));
    assert!((e - 0.25).abs() < 1e-14, "{e}");
    let c = 2.0;
    let gc = g.with_period(c);
    let ec = energy(&sine_torsion(&gc, 1.0 / c));
    assert!((ec / e - c.powi(5)).abs() < 1e-12, "{ec}");
    assert!((sup_torsion(&sine_torsion(&g, 3.0)) - 3.0).abs() < 1e-14);
}

#[test]
fn decay_fit_of_an_exponential() {
    let lambda = 4.0 * PI * PI;
    let recs: Vec<_> = (0..10).map(|i| record(i as f64 * 0.01, 0.1, (-lambda * i as f64 * 0.01).exp())).collect();
    let DecayFit::Rate { rate, bound } = decay_rate(&recs, 1.0) else {
        panic!("no rate")
    };
    assert!((rate - lambda).abs() < 1e-10);
    assert!((bound - lambda / 2.0).abs() < 1e-12);
    assert_eq!(DecayFit::Rate { rate, bound }.meets_bound(0.1), Some(true));
    let slow = DecayFit::Rate { rate: 0.8 * bound, bound };
    assert_eq!(slow.meets_bound(0.1), Some(false));
}

#[test]
fn decay_fit_refuses_degenerate_data() {
    let zeros: Vec<_> = (0..5).map(|i| record(i as f64, 0.0, 0.0)).collect();
    assert_eq!(decay_rate(&zeros, 1.0), DecayFit::Undefined);
    assert_eq!(DecayFit::Undefined.meets_bound(0.1), None);
    let big: Vec<_> = (0..5).map(|i| record(i as f64, 3.0, 1.0)).collect();
    assert!(matches!(decay_rate(&big, 1.0), DecayFit::HypothesisNotMet { .. }));
}

#[test]
fn convexity_defect_sign() {
    let down: Vec<_> = (0..5).map(|i| record(i as f64, 0.1, 1.0 / (1.0 + i as f64))).collect();
    assert!(convexity_defect(&down) < 0.0);
    let up: Vec<_> = (0..5).map(|i| record(i as f64, 0.1, 1.0 + i as f64)).collect();
    assert!((convexity_defect(&up) - 1.0).abs() < 1e-14);
    assert_eq!(convexity_defect(&[record(0.0, 0.0, 0.0)]), 0.0);
}

#[test]
fn interpolation_and_shi_on_special_fields() {
    let g = grid(16);
    let zero = MatrixField::zeros(&g);
    let rep = interpolation_monitor(&zero, 1e-6, 1e-3);
    assert!(rep.consistent && rep.energy == 0.0 && rep.sup_grad_t == 0.0);
    assert_eq!(shi_quantities(&zero, 0.5, 0.0), [0.0, 0.0]);
    let mut spike = Mat7::ZERO;
    spike.0[0][1] = 1.0;
    let spiky = Field::from_index_fn(&g, |p| if p == 0 { spike } else { Mat7::ZERO });
    assert!(!interpolation_monitor(&spiky, 1.0, 0.5).consistent);
    let s = sine_torsion(&g, 1.0);
    let h = g.spacing();
    assert!((sup_gradient(&s) - (2.0 * PI * h).sin() / h).abs() < 1e-3);
    let q = shi_quantities(&s, 0.25, 1.0);
    assert!((q[0] - 0.5 * sup_gradient(&s)).abs() < 1e-14);
}

#[test]
fn doubling_monitor_fires_once() {
    let mut m = DoublingMonitor::new(1.0, 0.5);
    assert!(m.observe(1.5, 0.9).is_none());
    let ev = m.observe(3.0, 1.1).unwrap();
    assert_eq!(ev.kind, EventKind::TorsionDoubled);
    assert_eq!(m.doubling_time(), Some(2.0));
    assert!((m.empirical_constant().unwrap() - 2.0).abs() < 1e-14);
    assert!(m.observe(4.0, 5.0).is_none());
    let mut flat = DoublingMonitor::new(0.0, 0.0);
    assert!(flat.observe(1.0, 1.0).is_none());
}

#[test]
fn monotonicity_residual_of_a_stationary_run() {
    let g = grid(8);
    let traj = evolve_fx(&IsometricState::identity(&g), 1e-3, 4, Integrator::Rk4, 1).unwrap();
    let spec = HeatKernelSpec::new(center(0.5, 0.5), 1.0);
    let samples = monotonicity_residual(&traj, &spec).unwrap();
    assert_eq!(samples.len(), 3);
    assert!(samples.iter().all(|s| s.residual == 0.0 && s.theta == 0.0));
}

#[test]
fn monotonicity_residual_needs_three_snapshots() {
    let g = grid(8);
    let traj = evolve_fx(&state(&g, 0.1, 1), 1e-4, 1, Integrator::Rk4, 1).unwrap();
    let spec = HeatKernelSpec::new(center(0.5, 0.5), 1.0);
    assert!(matches!(
        monotonicity_residual(&traj, &spec),
        Err(Error::InsufficientSnapshots { needed: 3, got: 2 })
    ));
}

#[test]
fn record_rescaling_matches_the_weights() {
    let mut r = record(0.5, 2.0, 3.0);
    r.energy = 1.0;
    let s = r.rescaled(2.0);
    assert_eq!((s.t, s.energy, s.sup_t, s.div_t_l2), (2.0, 32.0, 1.0, 24.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kernel_is_positive_with_unit_mass(x in 0.0f64..1.0, y in 0.0f64..1.0, t0 in 0.01f64..1.0) {
        let g = grid(16);
        let spec = HeatKernelSpec::new(center(x, y), t0);
        let u = spec.value(&g, 0.0).unwrap();
        prop_assert!(u.raw().iter().all(|&v| v > 0.0));
        prop_assert!((kernel_mass(&spec, &g, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theta_is_nonnegative_and_bounded(seed in 0u64..1000, t0 in 0.05f64..1.0) {
        let g = grid(8);
        let s = state(&g, 0.3, seed);
        let t = g2flow::bryant::torsion_of_state(&s);
        let spec = HeatKernelSpec::new(center(0.5, 0.5), t0);
        let th = theta(&t, &spec, 0.0).unwrap();
        let sup = sup_torsion(&t);
        prop_assert!(th >= 0.0 && th <= t0 * sup * sup * (1.0 + 1e-12));
    }
}
