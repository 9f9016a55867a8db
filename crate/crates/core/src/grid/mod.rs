//! Periodic space-time lattice, sampled fields and the averaging primitives
//! everything else is built on.
//!
//! A [`Grid`] discretizes the box `[0, T) x [0, L)^n` with `N_t` time samples
//! and `N_x` samples per spatial axis. Samples sit at `t_i = i * dt`,
//! `x_j = j * dx`; each sample is the center of its cell, so cell membership
//! tests reduce to tests on sample positions.

mod cylinder;
pub mod io;
mod norms;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use cylinder::axis_indices;
pub use cylinder::{
    cylinder_average, dilate, region_average, translate_interval, Cube, Footprint,
    ParabolicCylinder, Region, TimeInterval,
};
pub use norms::{lp_norm, mixed_norm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    m: usize,
    nt: usize,
    nx: usize,
    period_t: f64,
    period_x: f64,
}

impl Grid {
    pub fn new(
        n: usize,
        m: usize,
        nt: usize,
        nx: usize,
        period_t: f64,
        period_x: f64,
    ) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidGrid(format!("spatial dimension {n} not in {{1, 2}}")));
        }
        if m == 0 {
            return Err(Error::InvalidGrid("number of equations must be positive".into()));
        }
        for (name, len) in [("N_t", nt), ("N_x", nx)] {
            if len < 2 || !len.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("{name}={len} is not a power of two >= 2")));
            }
        }
        for (name, p) in [("T", period_t), ("L", period_x)] {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidGrid(format!("{name}={p} must be positive")));
            }
        }
        Ok(Self { n, m, nt, nx, period_t, period_x })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn period_t(&self) -> f64 {
        self.period_t
    }

    pub fn period_x(&self) -> f64 {
        self.period_x
    }

    pub fn dt(&self) -> f64 {
        self.period_t / self.nt as f64
    }

    pub fn dx(&self) -> f64 {
        self.period_x / self.nx as f64
    }

    pub fn spatial_points(&self) -> usize {
        self.nx.pow(self.n as u32)
    }

    pub fn points(&self) -> usize {
        self.nt * self.spatial_points()
    }

    /// Measure `dt * dx^n` of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.dt() * self.spatial_cell_volume()
    }

    pub fn spatial_cell_volume(&self) -> f64 {
        self.dx().powi(self.n as i32)
    }

    /// Measure `T * L^n` of the whole box.
    pub fn volume(&self) -> f64 {
        self.period_t * self.period_x.powi(self.n as i32)
    }

    pub fn time_of(&self, it: usize) -> f64 {
        it as f64 * self.dt()
    }

    pub fn space_of(&self, ix: usize) -> f64 {
        ix as f64 * self.dx()
    }

    /// Signed wavenumber `k` in `[-len/2, len/2)` for FFT index `index`.
    pub fn wavenumber(index: usize, len: usize) -> i64 {
        if index < len / 2 {
            index as i64
        } else {
            index as i64 - len as i64
        }
    }

    /// Angular time frequency `2 pi k / T` of FFT index `it`.
    pub fn time_frequency(&self, it: usize) -> f64 {
        2.0 * PI * Self::wavenumber(it, self.nt) as f64 / self.period_t
    }

    pub fn space_frequency(&self, ix: usize) -> f64 {
        2.0 * PI * Self::wavenumber(ix, self.nx) as f64 / self.period_x
    }

    /// Splits a flat point index into the time index and spatial indices.
    pub fn split_index(&self, p: usize) -> (usize, [usize; 2]) {
        let sp = self.spatial_points();
        let it = p / sp;
        let rest = p % sp;
        if self.n == 1 {
            (it, [rest, 0])
        } else {
            (it, [rest / self.nx, rest % self.nx])
        }
    }

    pub fn point_index(&self, it: usize, ix: &[usize]) -> usize {
        let mut s = 0;
        for &i in ix.iter().take(self.n) {
            s = s * self.nx + i;
        }
        it * self.spatial_points() + s
    }

    /// Same box and dimensions, different resolution.
    pub fn with_resolution(&self, nt: usize, nx: usize) -> Result<Self> {
        Self::new(self.n, self.m, nt, nx, self.period_t, self.period_x)
    }

    pub fn with_m(&self, m: usize) -> Result<Self> {
        Self::new(self.n, m, self.nt, self.nx, self.period_t, self.period_x)
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Component layout of a [`Field`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    /// `C^m` valued, e.g. u, f.
    Scalar,
    /// `C^{mn}` valued, component `(alpha, i)` stored at `alpha * n + i`.
    Vector,
    /// One nonnegative real component, e.g. `|Dv|`.
    Density,
    /// `(mn) x (mn)` matrices stored row-major, used by coefficient fields.
    Matrix,
}

impl Shape {
    pub fn comps(&self, grid: &Grid) -> usize {
        match self {
            Shape::Scalar => grid.m,
            Shape::Vector => grid.m * grid.n,
            Shape::Density => 1,
            Shape::Matrix => (grid.m * grid.n).pow(2),
        }
    }
}

/// Complex samples on a [`Grid`], row-major over `(t, x_1, .., x_n, component)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    shape: Shape,
    data: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: Grid, shape: Shape) -> Self {
        let len = grid.points() * shape.comps(&grid);
        Self { grid, shape, data: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn constant(grid: Grid, shape: Shape, value: Complex64) -> Self {
        let len = grid.points() * shape.comps(&grid);
        Self { grid, shape, data: vec![value; len] }
    }

    pub fn from_vec(grid: Grid, shape: Shape, data: Vec<Complex64>) -> Result<Self> {
        let want = grid.points() * shape.comps(&grid);
        if data.len() != want {
            return Err(Error::ShapeMismatch(format!(
                "expected {want} samples, got {}",
                data.len()
            )));
        }
        if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParameter("non-finite sample".into()));
        }
        Ok(Self { grid, shape, data })
    }

    /// Samples `f(t, x, component)` at every grid point.
    pub fn from_fn(grid: Grid, shape: Shape, f: impl Fn(f64, &[f64], usize) -> Complex64) -> Self {
        let comps = shape.comps(&grid);
        let mut data = Vec::with_capacity(grid.points() * comps);
        let mut x = [0.0; 2];
        for p in 0..grid.points() {
            let (it, ix) = grid.split_index(p);
            let t = grid.time_of(it);
            for d in 0..grid.n {
                x[d] = grid.space_of(ix[d]);
            }
            for c in 0..comps {
                data.push(f(t, &x[..grid.n], c));
            }
        }
        Self { grid, shape, data }
    }

    /// Nonnegative density from pointwise values.
    pub fn density(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let data = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        Self::from_vec(grid, Shape::Density, data)
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, shape: Shape, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), grid.points() * shape.comps(&grid));
        Self { grid, shape, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn comps(&self) -> usize {
        self.shape.comps(&self.grid)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Samples of one grid point.
    pub fn at(&self, p: usize) -> &[Complex64] {
        let c = self.comps();
        &self.data[p * c..(p + 1) * c]
    }

    /// Euclidean magnitude of the sample at point `p`.
    pub fn magnitude_at(&self, p: usize) -> f64 {
        self.at(p).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Pointwise Euclidean magnitude as a density.
    pub fn magnitude(&self) -> Field {
        let data =
            (0..self.grid.points()).map(|p| Complex64::new(self.magnitude_at(p), 0.0)).collect();
        Field::from_parts_unchecked(self.grid, Shape::Density, data)
    }

    pub fn component(&self, c: usize) -> Vec<Complex64> {
        let comps = self.comps();
        self.data.iter().skip(c).step_by(comps).copied().collect()
    }

    pub fn from_components(grid: Grid, shape: Shape, comps: &[Vec<Complex64>]) -> Result<Self> {
        let nc = shape.comps(&grid);
        if comps.len() != nc || comps.iter().any(|c| c.len() != grid.points()) {
            return Err(Error::ShapeMismatch(format!("expected {nc} components")));
        }
        let mut data = Vec::with_capacity(nc * grid.points());
        for p in 0..grid.points() {
            for c in comps {
                data.push(c[p]);
            }
        }
        Ok(Self { grid, shape, data })
    }

    fn ensure_compatible(&self, other: &Field) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        if self.comps() != other.comps() {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        Ok(())
    }

    pub fn zip_map(
        &self,
        other: &Field,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Field> {
        self.ensure_compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field { grid: self.grid, shape: self.shape, data })
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field {
            grid: self.grid,
            shape: self.shape,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> Field {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Field {
        self.map(|z| z * s)
    }

    /// Multiplies every component by a single-component field (cut-offs, weights).
    pub fn mul_pointwise(&self, weight: &Field) -> Result<Field> {
        self.grid.ensure_same(&weight.grid)?;
        if weight.comps() != 1 {
            return Err(Error::ShapeMismatch("weight must have one component".into()));
        }
        let c = self.comps();
        let data = self.data.iter().enumerate().map(|(i, &z)| z * weight.data[i / c]).collect();
        Ok(Field { grid: self.grid, shape: self.shape, data })
    }

    /// Reinterprets the samples under a shape with the same component count.
    pub fn with_shape(self, shape: Shape) -> Result<Field> {
        if shape.comps(&self.grid) != self.comps() {
            return Err(Error::ShapeMismatch(format!("{:?} -> {shape:?}", self.shape)));
        }
        Ok(Field { shape, ..self })
    }

    /// `sum u * conj(w) * dV`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.ensure_compatible(other)?;
        let s: Complex64 = self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn norm_l2(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.grid.points()).map(|p| self.magnitude_at(p)).fold(0.0, f64::max)
    }

    /// Mean of each component over the whole box.
    pub fn mean(&self) -> Vec<Complex64> {
        let c = self.comps();
        let mut acc = vec![Complex64::new(0.0, 0.0); c];
        for (i, z) in self.data.iter().enumerate() {
            acc[i % c] += z;
        }
        let np = self.grid.points() as f64;
        acc.into_iter().map(|z| z / np).collect()
    }

    /// Pointwise `|u|^s` as a density.
    pub fn magnitude_pow(&self, s: f64) -> Field {
        let data = (0..self.grid.points())
            .map(|p| Complex64::new(self.magnitude_at(p).powf(s), 0.0))
            .collect();
        Field::from_parts_unchecked(self.grid, Shape::Density, data)
    }

    pub fn min_real(&self) -> f64 {
        self.data.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }

    /// `||u(t, .)||_{L^2(space)}^2` for every time sample.
    pub fn slice_energy(&self) -> Vec<f64> {
        let sp = self.grid.spatial_points() * self.comps();
        let dv = self.grid.spatial_cell_volume();
        self.data.chunks(sp).map(|s| s.iter().map(|z| z.norm_sqr()).sum::<f64>() * dv).collect()
    }
}

/// A function of time alone, sampled like the time axis of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    period: f64,
    data: Vec<Complex64>,
}

impl TimeSeries {
    pub fn new(period: f64, data: Vec<Complex64>) -> Result<Self> {
        if data.len() < 2 || !data.len().is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "{} samples is not a power of two",
                data.len()
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid("period must be positive".into()));
        }
        Ok(Self { period, data })
    }

    pub fn from_fn(period: f64, len: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let dt = period / len as f64;
        Self::new(period, (0..len).map(|i| f(i as f64 * dt)).collect())
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.period / self.data.len() as f64
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn frequency(&self, k: usize) -> f64 {
        2.0 * PI * Grid::wavenumber(k, self.data.len()) as f64 / self.period
    }

    /// Sample indices whose positions fall in `interval` (periodically).
    pub fn indices_in(&self, interval: &TimeInterval) -> Vec<usize> {
        cylinder::axis_indices(interval.start(), interval.length(), self.dt(), self.data.len())
    }

    /// `(mean over interval of |h|^p)^{1/p}`.
    pub fn interval_average(&self, interval: &TimeInterval, p: f64) -> Result<f64> {
        let idx = self.indices_in(interval);
        if idx.is_empty() {
            return Err(Error::EmptyFootprint);
        }
        let s: f64 = idx.iter().map(|&i| self.data[i].norm().powf(p)).sum();
        Ok((s / idx.len() as f64).powf(1.0 / p))
    }

    pub fn interval_mean(&self, interval: &TimeInterval) -> Result<Complex64> {
        let idx = self.indices_in(interval);
        if idx.is_empty() {
            return Err(Error::EmptyFootprint);
        }
        Ok(idx.iter().map(|&i| self.data[i]).sum::<Complex64>() / idx.len() as f64)
    }
}
