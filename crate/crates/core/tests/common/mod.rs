#![allow(dead_code)]

use std::f64::consts::PI;

use g2flow::bryant::IsometricState;
use g2flow::flow::{build_initial_state, InitialCondition};
use g2flow::g2algebra::{Mat7, Vec7};
use g2flow::grid::{Field, Grid, GridSpec, VectorField};
use proptest::prelude::*;

pub fn grid(n: usize) -> Grid {
    Grid::new(1.0, n, &[0, 1], 2).unwrap()
}

pub fn grid_order(n: usize, order: u8) -> Grid {
    Grid::new(1.0, n, &[0, 1], order).unwrap()
}

pub fn spec(n: usize) -> GridSpec {
    grid(n).spec()
}

pub fn multi_mode(amplitude: f64, max_wavenumber: usize, seed: u64) -> InitialCondition {
    InitialCondition::MultiMode {
        amplitude,
        max_wavenumber,
        seed,
        components: None,
    }
}

pub fn state(g: &Grid, amplitude: f64, seed: u64) -> IsometricState {
    build_initial_state(&multi_mode(amplitude, 1, seed), g).unwrap()
}

pub fn sine_state(g: &Grid, amplitude: f64) -> IsometricState {
    let ic = InitialCondition::SingleMode {
        amplitude,
        direction: 0,
        component: 1,
    };
    build_initial_state(&ic, g).unwrap()
}

/// A band-limited vector field with one Fourier mode per component.
pub fn wave(g: &Grid, amplitude: f64, phase: f64) -> VectorField {
    Field::from_fn(g, |c| {
        Vec7(std::array::from_fn(|k| {
            amplitude * (2.0 * PI * (c[0] + (k % 3) as f64 * c[1]) + k as f64 + phase).sin()
        }))
    })
}

pub fn vec7() -> impl Strategy<Value = Vec7> {
    prop::array::uniform7(-1.0f64..1.0).prop_map(Vec7)
}

pub fn mat7() -> impl Strategy<Value = Mat7> {
    prop::array::uniform7(prop::array::uniform7(-1.0f64..1.0)).prop_map(Mat7)
}

pub fn symmetric_traceless() -> impl Strategy<Value = Mat7> {
    mat7().prop_map(|m| {
        let s = (m + m.transpose()) * 0.5;
        s + Mat7::diagonal(-s.trace() / 7.0)
    })
}

pub fn unit_sphere_point() -> impl Strategy<Value = (f64, Vec7)> {
    (-1.0f64..1.0, vec7()).prop_filter_map("nonzero", |(f, x)| {
        let r = (f * f + x.norm2()).sqrt();
        (r > 1e-3).then(|| (f / r, x * (1.0 / r)))
    })
}

pub fn ratio(coarse: f64, fine: f64) -> f64 {
    coarse / fine
}
