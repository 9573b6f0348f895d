mod common;

use std::f64::consts::PI;
use std::io::Cursor;

use common::{grid, grid_order};
use g2flow::g2algebra::{Mat7, Vec7};
use g2flow::grid::{
    div2, integrate, laplacian, partial, read_checkpoint, write_checkpoint, Field, Grid, GridSpec, ScalarField,
};
use g2flow::Error;
use proptest::prelude::*;

fn sine(g: &Grid) -> ScalarField {
    let l = g.period();
    Field::from_fn(g, |c| (2.0 * PI * c[0] / l).sin())
}

#[test]
fn rejects_bad_grids() {
    assert!(Grid::new(1.0, 16, &[0, 7], 2).is_err());
    assert!(Grid::new(1.0, 16, &[0, 0], 2).is_err());
    assert!(Grid::new(1.0, 16, &[0], 3).is_err());
    assert!(Grid::new(-1.0, 16, &[0], 2).is_err());
    assert!(Grid::new(1.0, 2, &[0], 4).is_err());
}

#[test]
fn spec_round_trip() {
    let g = Grid::new(2.0, 12, &[1, 4], 4).unwrap();
    assert_eq!(Grid::from_spec(&g.spec()).unwrap(), g);
    let parsed: GridSpec = serde_json::from_str(r#"{"period":1.0,"points_per_dim":8}"#).unwrap();
    assert_eq!(parsed.active_dims, vec![0, 1]);
    assert_eq!(parsed.stencil_order, 2);
}

#[test]
fn partial_of_constant_vanishes() {
    let g = grid(16);
    let c = Field::constant(&g, Vec7([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]));
    for d in 0..7 {
        assert_eq!(partial(&c, d).sup_norm(), 0.0);
    }
}

#[test]
fn partial_of_sine_converges_at_stencil_order() {
    for order in [2u8, 4] {
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let g = grid_order(n, order);
                let exact: ScalarField = Field::from_fn(&g, |c| 2.0 * PI * (2.0 * PI * c[0]).cos());
                partial(&sine(&g), 0).sub(&exact).sup_norm()
            })
            .collect();
        let measured = (errs[1] / errs[2]).log2();
        assert!((measured - order as f64).abs() < 0.2 * order as f64, "order {order}: {measured}");
    }
}

#[test]
fn mixed_partials_commute() {
    let g = grid(16);
    let u: ScalarField = Field::from_fn(&g, |c| (2.0 * PI * c[0]).sin() * (4.0 * PI * c[1]).cos() + c[0]);
    let a = partial(&partial(&u, 0), 1);
    let b = partial(&partial(&u, 1), 0);
    assert!(a.sub(&b).sup_norm() < 1e-11);
}

#[test]
fn laplacian_of_sine_is_an_eigenfunction() {
    let errs: Vec<f64> = [16, 32]
        .iter()
        .map(|&n| {
            let g = grid(n);
            let s = sine(&g);
            laplacian(&s).sub(&s.scaled(-(2.0 * PI).powi(2))).sup_norm()
        })
        .collect();
    assert!(errs[0] / errs[1] > 3.8);
}

#[test]
fn divergence_of_product_tensor() {
    let v = Vec7([0.3, -1.0, 0.5, 0.0, 2.0, 0.1, -0.7]);
    let errs: Vec<f64> = [16, 32]
        .iter()
        .map(|&n| {
            let g = grid(n);
            let u: ScalarField = Field::from_fn(&g, |c| (2.0 * PI * (c[0] + c[1])).sin());
            let du: Vec<ScalarField> = (0..7).map(|d| partial(&u, d)).collect();
            let t = Field::from_index_fn(&g, |p| Mat7::outer(&Vec7(std::array::from_fn(|d| du[d].at(p))), &v));
            let expect = Field::from_index_fn(&g, |p| v * (-8.0 * PI * PI * u.at(p)));
            div2(&t).sub(&expect).sup_norm()
        })
        .collect();
    assert!(errs[1] < 0.02 * 16.0 * PI * PI, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
}

#[test]
fn integrals() {
    let g = Grid::new(2.0, 16, &[0, 1], 2).unwrap();
    assert!((integrate(&Field::constant(&g, 1.0)) - 128.0).abs() < 1e-12);
    assert!(integrate(&sine(&g)).abs() < 1e-12);
    let s2 = sine(&g).mul(&sine(&g));
    assert!((integrate(&s2) - 64.0).abs() < 1e-12);
}

#[test]
fn integration_is_deterministic_across_thread_counts() {
    let g = grid(64);
    let u: ScalarField = Field::from_fn(&g, |c| (c[0] * 7.3).sin() * (c[1] * 3.1).exp());
    let a = integrate(&u);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| integrate(&u));
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn checkpoint_round_trip() {
    let g = Grid::new(1.5, 8, &[2, 5], 4).unwrap();
    let f: ScalarField = Field::from_fn(&g, |c| c[2].cos());
    let x = Field::from_fn(&g, |c| Vec7(std::array::from_fn(|k| c[5] * k as f64)));
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &f, &x).unwrap();
    assert_eq!(&buf[..4], b"G2FL");
    assert_eq!(buf.len(), 22 + 8 * 64 * 8);
    let cp = read_checkpoint(Cursor::new(&buf)).unwrap();
    assert_eq!(cp.grid, g);
    assert_eq!(cp.f, f);
    assert_eq!(cp.x, x);
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let g = grid(4);
    let f = Field::constant(&g, 1.0);
    let x = Field::constant(&g, Vec7::ZERO);
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &f, &x).unwrap();
    let truncated = &buf[..buf.len() - 1];
    assert!(matches!(read_checkpoint(Cursor::new(truncated)), Err(Error::Checkpoint(_))));
    let mut bad_magic = buf.clone();
    bad_magic[0] = b'X';
    assert!(matches!(read_checkpoint(Cursor::new(&bad_magic)), Err(Error::Checkpoint(_))));
    let mut bad_version = buf;
    bad_version[4] = 9;
    assert!(matches!(read_checkpoint(Cursor::new(&bad_version)), Err(Error::Checkpoint(_))));
}

proptest! {
    #[test]
    fn partial_is_linear(a in -3.0f64..3.0, k in 1usize..4) {
        let g = grid(16);
        let u: ScalarField = Field::from_fn(&g, |c| (2.0 * PI * k as f64 * c[1]).cos());
        let v: ScalarField = Field::from_fn(&g, |c| (2.0 * PI * c[0]).sin());
        let lhs = partial(&u.add(&v.scaled(a)), 1);
        let rhs = partial(&u, 1).add(&partial(&v, 1).scaled(a));
        prop_assert!(lhs.sub(&rhs).sup_norm() < 1e-10);
    }

    #[test]
    fn integral_of_derivative_vanishes(k in 1usize..5, phase in 0.0f64..6.3) {
        let g = grid(16);
        let u: ScalarField = Field::from_fn(&g, |c| (2.0 * PI * k as f64 * c[0] + phase).sin() * (c[1] * 2.0 * PI).cos());
        prop_assert!(integrate(&partial(&u, 0)).abs() < 1e-12);
    }
}
