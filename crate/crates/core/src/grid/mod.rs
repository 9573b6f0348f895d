//! Periodic lattices on the flat 7-torus and finite-difference calculus.
//!
//! A [`Grid`] samples `N` points per *active* direction; every field is
//! constant along the remaining directions, so derivatives along them vanish
//! and each contributes a factor `L` to volume integrals. Points are numbered
//! row-major over the active directions in increasing order.
//!
//! Fields are stored structure-of-arrays: component `c` of a [`Field`] occupies
//! a contiguous plane of `npoints` values.
//!
//! First derivatives are central differences of order 2 or 4. The Laplacian is
//! the composite `Σ_d D_d D_d` of those same first-derivative stencils, so that
//! discrete divergence of a discrete gradient is exactly the discrete Laplacian
//! and summation by parts holds exactly for every operator in the crate.

mod checkpoint;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::g2algebra::{Cube7, Form3, Form4, Mat7, Vec7, NCOMP};

/// User-facing description of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub period: f64,
    pub points_per_dim: usize,
    #[serde(default = "default_active")]
    pub active_dims: Vec<usize>,
    #[serde(default = "default_order")]
    pub stencil_order: u8,
}

fn default_active() -> Vec<usize> {
    vec![0, 1]
}

fn default_order() -> u8 {
    2
}

/// A periodic lattice with a subset of varying directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    period: f64,
    n: usize,
    active: [usize; 7],
    nactive: usize,
    order: u8,
    npoints: usize,
}

impl Grid {
    pub fn new(period: f64, points_per_dim: usize, active_dims: &[usize], stencil_order: u8) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Config(format!("period must be positive, got {period}")));
        }
        if points_per_dim < 4 || points_per_dim % 2 != 0 {
            return Err(Error::Config(format!(
                "points per dimension must be even and at least 4, got {points_per_dim}"
            )));
        }
        if stencil_order != 2 && stencil_order != 4 {
            return Err(Error::Config(format!("stencil order must be 2 or 4, got {stencil_order}")));
        }
        let mut dims = active_dims.to_vec();
        dims.sort_unstable();
        dims.dedup();
        if dims.is_empty() || dims.len() != active_dims.len() || dims.iter().any(|&d| d > 6) {
            return Err(Error::Config(format!("invalid active dimensions {active_dims:?}")));
        }
        let mut active = [0; 7];
        active[..dims.len()].copy_from_slice(&dims);
        let npoints = points_per_dim
            .checked_pow(dims.len() as u32)
            .filter(|&p| p <= 1 << 26)
            .ok_or_else(|| Error::Config("grid too large".into()))?;
        Ok(Grid {
            period,
            n: points_per_dim,
            active,
            nactive: dims.len(),
            order: stencil_order,
            npoints,
        })
    }

    pub fn from_spec(spec: &GridSpec) -> Result<Self> {
        Grid::new(spec.period, spec.points_per_dim, &spec.active_dims, spec.stencil_order)
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            period: self.period,
            points_per_dim: self.n,
            active_dims: self.active_dims().to_vec(),
            stencil_order: self.order,
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn active_dims(&self) -> &[usize] {
        &self.active[..self.nactive]
    }

    pub fn is_active(&self, dir: usize) -> bool {
        self.active_dims().contains(&dir)
    }

    pub fn active_mask(&self) -> u8 {
        self.active_dims().iter().fold(0u8, |m, &d| m | (1 << d))
    }

    pub fn stencil_order(&self) -> u8 {
        self.order
    }

    pub fn npoints(&self) -> usize {
        self.npoints
    }

    /// Same lattice with a different period.
    pub fn with_period(&self, period: f64) -> Self {
        Grid { period, ..*self }
    }

    /// Same lattice with a different stencil order.
    pub fn with_order(&self, order: u8) -> Result<Self> {
        Grid::new(self.period, self.n, self.active_dims(), order)
    }

    /// Same directions and period with `n` points per direction.
    pub fn with_points(&self, n: usize) -> Result<Self> {
        Grid::new(self.period, n, self.active_dims(), self.order)
    }

    /// Point-index stride along an active direction.
    fn stride(&self, dir: usize) -> Option<usize> {
        let pos = self.active_dims().iter().position(|&d| d == dir)?;
        Some(self.n.pow((self.nactive - 1 - pos) as u32))
    }

    /// Lattice index of `point` along each active direction.
    pub fn multi_index(&self, point: usize) -> [usize; 7] {
        let mut m = [0; 7];
        let mut rest = point;
        for a in (0..self.nactive).rev() {
            m[self.active[a]] = rest % self.n;
            rest /= self.n;
        }
        m
    }

    /// Point index from lattice indices along the active directions (others ignored).
    pub fn point_index(&self, multi: &[usize; 7]) -> usize {
        self.active_dims()
            .iter()
            .fold(0, |acc, &d| acc * self.n + multi[d].rem_euclid(self.n))
    }

    /// Coordinates of a point; inactive coordinates are 0.
    pub fn coords(&self, point: usize) -> [f64; 7] {
        let m = self.multi_index(point);
        let h = self.spacing();
        let mut x = [0.0; 7];
        for &d in self.active_dims() {
            x[d] = m[d] as f64 * h;
        }
        x
    }

    /// Volume weight of one lattice point: `h^k L^(7-k)`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.nactive as i32) * self.period.powi(7 - self.nactive as i32)
    }

    pub fn volume(&self) -> f64 {
        self.period.powi(7)
    }

    /// Explicit stability bound `safety · h² / (2 · |active|)`.
    pub fn cfl_limit(&self, safety: f64) -> f64 {
        safety * self.spacing().powi(2) / (2.0 * self.nactive as f64)
    }
}

/// Values storable pointwise in a [`Field`].
pub trait Tensor: Copy + Default + Send + Sync + 'static {
    const LEN: usize;
    fn component(&self, c: usize) -> f64;
    fn set_component(&mut self, c: usize, v: f64);
}

impl Tensor for f64 {
    const LEN: usize = 1;
    #[inline]
    fn component(&self, _c: usize) -> f64 {
        *self
    }
    #[inline]
    fn set_component(&mut self, _c: usize, v: f64) {
        *self = v;
    }
}

impl Tensor for Vec7 {
    const LEN: usize = 7;
    #[inline]
    fn component(&self, c: usize) -> f64 {
        self.0[c]
    }
    #[inline]
    fn set_component(&mut self, c: usize, v: f64) {
        self.0[c] = v;
    }
}

impl Tensor for Mat7 {
    const LEN: usize = 49;
    #[inline]
    fn component(&self, c: usize) -> f64 {
        self.0[c / 7][c % 7]
    }
    #[inline]
    fn set_component(&mut self, c: usize, v: f64) {
        self.0[c / 7][c % 7] = v;
    }
}

impl Tensor for Form3 {
    const LEN: usize = NCOMP;
    #[inline]
    fn component(&self, c: usize) -> f64 {
        self.0[c]
    }
    #[inline]
    fn set_component(&mut self, c: usize, v: f64) {
        self.0[c] = v;
    }
}

impl Tensor for Form4 {
    const LEN: usize = NCOMP;
    #[inline]
    fn component(&self, c: usize) -> f64 {
        self.0[c]
    }
    #[inline]
    fn set_component(&mut self, c: usize, v: f64) {
        self.0[c] = v;
    }
}

impl Tensor for Cube7 {
    const LEN: usize = 343;
    #[inline]
    fn component(&self, c: usize) -> f64 {
        self.0[c / 49][(c / 7) % 7][c % 7]
    }
    #[inline]
    fn set_component(&mut self, c: usize, v: f64) {
        self.0[c / 49][(c / 7) % 7][c % 7] = v;
    }
}

/// A tensor field sampled on a grid, stored structure-of-arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T: Tensor> {
    grid: Grid,
    data: Vec<f64>,
    _kind: std::marker::PhantomData<T>,
}

pub type ScalarField = Field<f64>;
pub type VectorField = Field<Vec7>;
pub type MatrixField = Field<Mat7>;
pub type Form3Field = Field<Form3>;
pub type Form4Field = Field<Form4>;

const PAR_MIN: usize = 256;

impl<T: Tensor> Field<T> {
    pub fn zeros(grid: &Grid) -> Self {
        Field {
            grid: *grid,
            data: vec![0.0; T::LEN * grid.npoints()],
            _kind: Default::default(),
        }
    }

    pub fn constant(grid: &Grid, value: T) -> Self {
        Self::from_index_fn(grid, |_| value)
    }

    /// `f` is called with the point index.
    pub fn from_index_fn<F>(grid: &Grid, f: F) -> Self
    where
        F: Fn(usize) -> T + Sync + Send,
    {
        let values: Vec<T> = (0..grid.npoints())
            .into_par_iter()
            .with_min_len(PAR_MIN)
            .map(f)
            .collect();
        Self::from_values(grid, &values)
    }

    /// `f` is called with the point coordinates.
    pub fn from_fn<F>(grid: &Grid, f: F) -> Self
    where
        F: Fn([f64; 7]) -> T + Sync + Send,
    {
        Self::from_index_fn(grid, |p| f(grid.coords(p)))
    }

    pub fn from_values(grid: &Grid, values: &[T]) -> Self {
        assert_eq!(values.len(), grid.npoints());
        let n = grid.npoints();
        let mut data = vec![0.0; T::LEN * n];
        data.par_chunks_mut(n).enumerate().for_each(|(c, plane)| {
            for (p, x) in plane.iter_mut().enumerate() {
                *x = values[p].component(c);
            }
        });
        Field {
            grid: *grid,
            data,
            _kind: Default::default(),
        }
    }

    /// Wraps raw structure-of-arrays data.
    pub fn from_raw(grid: &Grid, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), T::LEN * grid.npoints());
        Field {
            grid: *grid,
            data,
            _kind: Default::default(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    pub fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<f64> {
        self.data
    }

    /// Component plane `c`.
    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.grid.npoints();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn at(&self, point: usize) -> T {
        let n = self.grid.npoints();
        let mut v = T::default();
        for c in 0..T::LEN {
            v.set_component(c, self.data[c * n + point]);
        }
        v
    }

    pub fn values(&self) -> Vec<T> {
        (0..self.grid.npoints())
            .into_par_iter()
            .with_min_len(PAR_MIN)
            .map(|p| self.at(p))
            .collect()
    }

    pub fn map<U: Tensor, F>(&self, f: F) -> Field<U>
    where
        F: Fn(T) -> U + Sync + Send,
    {
        Field::from_index_fn(&self.grid, |p| f(self.at(p)))
    }

    pub fn zip_map<U: Tensor, V: Tensor, F>(&self, other: &Field<U>, f: F) -> Field<V>
    where
        F: Fn(T, U) -> V + Sync + Send,
    {
        assert_eq!(self.grid, other.grid);
        Field::from_index_fn(&self.grid, |p| f(self.at(p), other.at(p)))
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &Field<T>) {
        assert_eq!(self.grid, other.grid);
        self.data
            .par_iter_mut()
            .with_min_len(PAR_MIN)
            .zip(other.data.par_iter())
            .for_each(|(x, y)| *x += a * y);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.data.par_iter_mut().with_min_len(PAR_MIN).for_each(|x| *x *= a);
        out
    }

    pub fn add(&self, other: &Field<T>) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Field<T>) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Largest absolute component value.
    pub fn sup_norm(&self) -> f64 {
        self.data
            .par_iter()
            .with_min_len(PAR_MIN)
            .map(|x| x.abs())
            .reduce(|| 0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.par_iter().with_min_len(PAR_MIN).all(|x| x.is_finite())
    }

    /// Pointwise scalar extracted by `f`.
    pub fn pointwise<F>(&self, f: F) -> ScalarField
    where
        F: Fn(T) -> f64 + Sync + Send,
    {
        self.map(f)
    }

    /// Maximum over points of `f(value)`.
    pub fn max_of<F>(&self, f: F) -> f64
    where
        F: Fn(T) -> f64 + Sync + Send,
    {
        (0..self.grid.npoints())
            .into_par_iter()
            .with_min_len(PAR_MIN)
            .map(|p| f(self.at(p)))
            .reduce(|| f64::NEG_INFINITY, f64::max)
    }

    /// Same values on a grid with a different period (parabolic rescaling).
    pub fn with_grid(&self, grid: &Grid) -> Self {
        assert_eq!(grid.npoints(), self.grid.npoints());
        Field {
            grid: *grid,
            data: self.data.clone(),
            _kind: Default::default(),
        }
    }
}

impl Field<f64> {
    /// Pointwise product of two scalar fields.
    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a * b)
    }
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if x.len() <= BLOCK {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// Riemann sum times the cell volume; inactive directions contribute `L` each.
pub fn integrate(field: &ScalarField) -> f64 {
    pairwise_sum(field.raw()) * field.grid().cell_volume()
}

/// Central-difference weights `(offset, weight)` scaled by `1/h`.
fn first_derivative_weights(order: u8) -> &'static [(isize, f64)] {
    const O2: [(isize, f64); 2] = [(-1, -0.5), (1, 0.5)];
    const O4: [(isize, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
    match order {
        2 => &O2,
        _ => &O4,
    }
}

/// Central finite difference along `dir`; zero when `dir` is inactive.
pub fn partial<T: Tensor>(field: &Field<T>, dir: usize) -> Field<T> {
    let grid = *field.grid();
    let Some(stride) = grid.stride(dir) else {
        return Field::zeros(&grid);
    };
    let n = grid.points_per_dim();
    let np = grid.npoints();
    let inv_h = 1.0 / grid.spacing();
    let weights = first_derivative_weights(grid.stencil_order());
    let src = field.raw();
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(np).enumerate().for_each(|(c, plane)| {
        let base_plane = &src[c * np..(c + 1) * np];
        for (p, o) in plane.iter_mut().enumerate() {
            let i = (p / stride) % n;
            let base = p - i * stride;
            let mut s = 0.0;
            for &(off, w) in weights {
                let j = (i as isize + off).rem_euclid(n as isize) as usize;
                s += w * base_plane[base + j * stride];
            }
            *o = s * inv_h;
        }
    });
    Field::from_raw(&grid, out)
}

/// All seven partial derivatives; inactive directions are `None`.
#[derive(Clone, Debug)]
pub struct Partials<T: Tensor> {
    dirs: [Option<Field<T>>; 7],
}

impl<T: Tensor> Partials<T> {
    pub fn of(field: &Field<T>) -> Self {
        let grid = field.grid();
        Partials {
            dirs: std::array::from_fn(|d| grid.is_active(d).then(|| partial(field, d))),
        }
    }

    pub fn dir(&self, d: usize) -> Option<&Field<T>> {
        self.dirs[d].as_ref()
    }

    /// `∂_d` at a point, zero for inactive directions.
    #[inline]
    pub fn at(&self, d: usize, point: usize) -> T {
        match &self.dirs[d] {
            Some(f) => f.at(point),
            None => T::default(),
        }
    }
}

/// `Σ_d ∂_d ∂_d` with the composite first-derivative stencil.
pub fn laplacian<T: Tensor>(field: &Field<T>) -> Field<T> {
    let grid = *field.grid();
    let mut out = Field::zeros(&grid);
    for &d in grid.active_dims() {
        out.axpy(1.0, &partial(&partial(field, d), d));
    }
    out
}

/// `(∇f)_p = ∂_p f`.
pub fn grad_scalar(f: &ScalarField) -> VectorField {
    let grid = *f.grid();
    let mut data = vec![0.0; 7 * grid.npoints()];
    let np = grid.npoints();
    for &d in grid.active_dims() {
        data[d * np..(d + 1) * np].copy_from_slice(partial(f, d).raw());
    }
    Field::from_raw(&grid, data)
}

/// `(∇X)_pq = ∂_p X_q`.
pub fn grad_vector(x: &VectorField) -> MatrixField {
    let grid = *x.grid();
    let np = grid.npoints();
    let mut data = vec![0.0; 49 * np];
    for &d in grid.active_dims() {
        let dx = partial(x, d);
        for q in 0..7 {
            data[(7 * d + q) * np..(7 * d + q + 1) * np].copy_from_slice(dx.plane(q));
        }
    }
    Field::from_raw(&grid, data)
}

/// `(Div T)_q = ∂_p T_pq`, contracting the first slot.
pub fn div2(t: &MatrixField) -> VectorField {
    let grid = *t.grid();
    let np = grid.npoints();
    let mut out = Field::<Vec7>::zeros(&grid);
    for &p in grid.active_dims() {
        let row = Field::<Vec7>::from_raw(&grid, t.raw()[7 * p * np..7 * (p + 1) * np].to_vec());
        out.axpy(1.0, &partial(&row, p));
    }
    out
}

/// `div X = ∂_p X_p`.
pub fn div_vector(x: &VectorField) -> ScalarField {
    let grid = *x.grid();
    let mut out = ScalarField::zeros(&grid);
    for &p in grid.active_dims() {
        let comp = Field::<f64>::from_raw(&grid, x.plane(p).to_vec());
        out.axpy(1.0, &partial(&comp, p));
    }
    out
}
