//! Fourier multipliers in time and space.
//!
//! Time multipliers send the zero time frequency to zero, so the half
//! derivative and the Hilbert transform act on fields modulo constants in
//! time and `H^2 = -1` holds only on fields with zero time mean.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::{self, Axes};
use crate::grid::{Field, Grid, Shape, TimeSeries};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActsOn {
    Time,
    Space,
    Joint,
}

impl ActsOn {
    fn axes(self) -> Axes {
        match self {
            ActsOn::Time => Axes::Time,
            ActsOn::Space => Axes::Space,
            ActsOn::Joint => Axes::All,
        }
    }
}

/// A symbol `m(tau, xi)` together with the axes it depends on.
#[derive(Debug, Clone, Copy)]
pub struct MultiplierSpec {
    pub acts_on: ActsOn,
    pub symbol: fn(f64, &[f64]) -> Complex64,
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn half_derivative_symbol(tau: f64, _: &[f64]) -> Complex64 {
    Complex64::new(tau.abs().sqrt(), 0.0)
}

fn hilbert_symbol(tau: f64, _: &[f64]) -> Complex64 {
    Complex64::new(0.0, sgn(tau))
}

fn time_derivative_symbol(tau: f64, _: &[f64]) -> Complex64 {
    Complex64::new(0.0, tau)
}

fn laplacian_symbol(_: f64, xi: &[f64]) -> Complex64 {
    Complex64::new(-xi.iter().map(|x| x * x).sum::<f64>(), 0.0)
}

fn parabolic_sobolev_symbol(tau: f64, xi: &[f64]) -> Complex64 {
    let xi2: f64 = xi.iter().map(|x| x * x).sum();
    let den = tau.abs().sqrt() + xi2.sqrt();
    if den == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::new(xi2, tau).sqrt() / den
}

impl MultiplierSpec {
    pub const HALF_DERIVATIVE: Self =
        Self { acts_on: ActsOn::Time, symbol: half_derivative_symbol };
    pub const HILBERT: Self = Self { acts_on: ActsOn::Time, symbol: hilbert_symbol };
    pub const TIME_DERIVATIVE: Self =
        Self { acts_on: ActsOn::Time, symbol: time_derivative_symbol };
    pub const LAPLACIAN: Self = Self { acts_on: ActsOn::Space, symbol: laplacian_symbol };
    pub const PARABOLIC_SOBOLEV: Self =
        Self { acts_on: ActsOn::Joint, symbol: parabolic_sobolev_symbol };

    pub fn apply(&self, u: &Field) -> Field {
        let data = apply_symbol(u.grid(), u.comps(), u.data(), self.acts_on.axes(), self.symbol);
        Field::from_parts_unchecked(*u.grid(), u.shape(), data)
    }

    /// `max |m|` over the discrete frequency set of `grid`.
    pub fn sup_modulus(&self, grid: &Grid) -> f64 {
        (0..grid.points())
            .map(|p| {
                let (tau, xi) = frequencies(grid, p);
                (self.symbol)(tau, &xi[..grid.n()]).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Angular frequencies `(tau, xi)` of spectral point `p`.
pub fn frequencies(grid: &Grid, p: usize) -> (f64, [f64; 2]) {
    let (it, ix) = grid.split_index(p);
    let mut xi = [0.0; 2];
    for d in 0..grid.n() {
        xi[d] = grid.space_frequency(ix[d]);
    }
    (grid.time_frequency(it), xi)
}

pub(crate) fn apply_symbol(
    grid: &Grid,
    comps: usize,
    data: &[Complex64],
    axes: Axes,
    symbol: impl Fn(f64, &[f64]) -> Complex64 + Sync,
) -> Vec<Complex64> {
    let mut buf = data.to_vec();
    fft::transform(grid, comps, &mut buf, axes, true);
    let n = grid.n();
    buf.par_chunks_mut(comps).enumerate().for_each(|(p, chunk)| {
        let (mut tau, mut xi) = frequencies(grid, p);
        match axes {
            Axes::Time => xi = [0.0; 2],
            Axes::Space => tau = 0.0,
            Axes::All => {}
        }
        let s = symbol(tau, &xi[..n]);
        chunk.iter_mut().for_each(|z| *z *= s);
    });
    fft::transform(grid, comps, &mut buf, axes, false);
    buf
}

/// Spatial gradient of `comps`-component data; output component `c * n + i`
/// holds `d_i` of component `c`.
pub(crate) fn gradient_data(grid: &Grid, comps: usize, data: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let mut hat = data.to_vec();
    fft::transform(grid, comps, &mut hat, Axes::Space, true);
    let mut out = vec![Complex64::new(0.0, 0.0); hat.len() * n];
    out.par_chunks_mut(comps * n).enumerate().for_each(|(p, chunk)| {
        let (_, xi) = frequencies(grid, p);
        for c in 0..comps {
            for i in 0..n {
                chunk[c * n + i] = I * xi[i] * hat[p * comps + c];
            }
        }
    });
    fft::transform(grid, comps * n, &mut out, Axes::Space, false);
    out
}

/// Divergence of data whose components are grouped as `c * n + i`.
pub(crate) fn divergence_data(grid: &Grid, comps: usize, data: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let mut hat = data.to_vec();
    fft::transform(grid, comps * n, &mut hat, Axes::Space, true);
    let mut out = vec![Complex64::new(0.0, 0.0); hat.len() / n];
    out.par_chunks_mut(comps).enumerate().for_each(|(p, chunk)| {
        let (_, xi) = frequencies(grid, p);
        for (c, z) in chunk.iter_mut().enumerate() {
            *z = (0..n).map(|i| I * xi[i] * hat[p * comps * n + c * n + i]).sum();
        }
    });
    fft::transform(grid, comps, &mut out, Axes::Space, false);
    out
}

pub fn half_derivative_t(u: &Field) -> Field {
    MultiplierSpec::HALF_DERIVATIVE.apply(u)
}

pub fn hilbert_t(u: &Field) -> Field {
    MultiplierSpec::HILBERT.apply(u)
}

pub fn time_derivative(u: &Field) -> Field {
    MultiplierSpec::TIME_DERIVATIVE.apply(u)
}

/// `D^{1/2} H D^{1/2} u`, which must coincide with [`time_derivative`].
pub fn factored_time_derivative(u: &Field) -> Field {
    half_derivative_t(&hilbert_t(&half_derivative_t(u)))
}

pub fn parabolic_sobolev_multiplier(u: &Field) -> Field {
    MultiplierSpec::PARABOLIC_SOBOLEV.apply(u)
}

pub fn laplacian_x(u: &Field) -> Field {
    MultiplierSpec::LAPLACIAN.apply(u)
}

pub fn gradient_x(u: &Field) -> Result<Field> {
    if u.shape() != Shape::Scalar {
        return Err(Error::ShapeMismatch(format!("gradient of {:?} field", u.shape())));
    }
    let data = gradient_data(u.grid(), u.comps(), u.data());
    Ok(Field::from_parts_unchecked(*u.grid(), Shape::Vector, data))
}

pub fn divergence_x(f: &Field) -> Result<Field> {
    if f.shape() != Shape::Vector {
        return Err(Error::ShapeMismatch(format!("divergence of {:?} field", f.shape())));
    }
    let data = divergence_data(f.grid(), f.grid().m(), f.data());
    Ok(Field::from_parts_unchecked(*f.grid(), Shape::Scalar, data))
}

/// `grad v`, `D^{1/2} v` and `H D^{1/2} v`.
#[derive(Debug, Clone)]
pub struct ParabolicParts {
    pub grad: Field,
    pub half: Field,
    pub hilbert_half: Field,
}

impl ParabolicParts {
    pub fn of(v: &Field) -> Result<Self> {
        let grad = gradient_x(v)?;
        let half = half_derivative_t(v);
        let hilbert_half = hilbert_t(&half);
        Ok(Self { grad, half, hilbert_half })
    }

    /// `|grad v| + |H D^{1/2} v| + |D^{1/2} v| + |v|` pointwise.
    pub fn differential(&self, v: &Field) -> Field {
        let g = *v.grid();
        let data = (0..g.points())
            .map(|p| {
                Complex64::new(
                    self.grad.magnitude_at(p)
                        + self.hilbert_half.magnitude_at(p)
                        + self.half.magnitude_at(p)
                        + v.magnitude_at(p),
                    0.0,
                )
            })
            .collect();
        Field::from_parts_unchecked(g, Shape::Density, data)
    }

    /// `|grad v| + |D^{1/2} v| + |H D^{1/2} v|`, the part without `|v|`.
    pub fn derivative_density(&self) -> Field {
        let g = *self.half.grid();
        let data = (0..g.points())
            .map(|p| {
                Complex64::new(
                    self.grad.magnitude_at(p)
                        + self.half.magnitude_at(p)
                        + self.hilbert_half.magnitude_at(p),
                    0.0,
                )
            })
            .collect();
        Field::from_parts_unchecked(g, Shape::Density, data)
    }
}

pub fn parabolic_differential(v: &Field) -> Result<Field> {
    Ok(ParabolicParts::of(v)?.differential(v))
}

fn series_multiplier(h: &TimeSeries, symbol: fn(f64, &[f64]) -> Complex64) -> TimeSeries {
    let mut buf = h.data().to_vec();
    fft::transform_series(&mut buf, true);
    for (k, z) in buf.iter_mut().enumerate() {
        *z *= symbol(h.frequency(k), &[]);
    }
    fft::transform_series(&mut buf, false);
    TimeSeries::new(h.period(), buf).expect("same length as a valid series")
}

pub fn half_derivative_series(h: &TimeSeries) -> TimeSeries {
    series_multiplier(h, half_derivative_symbol)
}

pub fn hilbert_series(h: &TimeSeries) -> TimeSeries {
    series_multiplier(h, hilbert_symbol)
}

pub fn derivative_series(h: &TimeSeries) -> TimeSeries {
    series_multiplier(h, time_derivative_symbol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid1(m: usize) -> Grid {
        Grid::new(1, m, 32, 16, 2.0 * PI, 2.0 * PI).unwrap()
    }

    fn assert_close(a: &Field, b: &Field, tol: f64) {
        let err = a.sub(b).unwrap().max_abs();
        assert!(err <= tol, "error {err:e}");
    }

    fn wave(g: Grid, f: impl Fn(f64, &[f64]) -> f64) -> Field {
        Field::from_fn(g, Shape::Scalar, |t, x, _| Complex64::new(f(t, x), 0.0))
    }

    #[test]
    fn half_derivative_of_cosines() {
        let g = grid1(1);
        let u = wave(g, |t, _| t.cos());
        assert_close(&half_derivative_t(&u), &u, 1e-13);
        let u4 = wave(g, |t, _| (4.0 * t).cos());
        assert_close(&half_derivative_t(&u4), &u4.scale_real(2.0), 1e-13);
    }

    #[test]
    fn hilbert_and_derivative_of_cosine() {
        let g = grid1(1);
        let u = wave(g, |t, _| t.cos());
        let s = wave(g, |t, _| -t.sin());
        assert_close(&hilbert_t(&u), &s, 1e-13);
        assert_close(&time_derivative(&u), &s, 1e-13);
        let c = Field::constant(g, Shape::Scalar, Complex64::new(2.0, -1.0));
        assert!(time_derivative(&c).max_abs() < 1e-14);
        assert!(factored_time_derivative(&c).max_abs() < 1e-14);
    }

    #[test]
    fn gradient_of_sine() {
        let g = Grid::new(1, 1, 8, 32, 1.0, 3.0).unwrap();
        let k = 2.0 * PI / 3.0;
        let u = wave(g, |_, x| (k * x[0]).sin());
        let du = gradient_x(&u).unwrap();
        let want = wave(g, |_, x| k * (k * x[0]).cos()).with_shape(Shape::Vector).unwrap();
        assert_close(&du, &want, 1e-12);
        assert!(gradient_x(&du).is_err());
        assert!(divergence_x(&u).is_err());
    }

    #[test]
    fn parabolic_differential_closed_form() {
        let g = Grid::new(1, 1, 32, 32, 2.0 * PI, 2.0 * PI).unwrap();
        let v = wave(g, |t, x| t.cos() * x[0].sin());
        let d = parabolic_differential(&v).unwrap();
        let want = Field::from_fn(g, Shape::Density, |t, x, _| {
            let (ct, st, cx, sx) = (t.cos(), t.sin(), x[0].cos(), x[0].sin());
            Complex64::new((ct * cx).abs() + (st * sx).abs() + 2.0 * (ct * sx).abs(), 0.0)
        });
        assert_close(&d, &want, 1e-12);
        let c = Field::constant(g, Shape::Scalar, Complex64::new(0.0, 3.0));
        let dc = parabolic_differential(&c).unwrap();
        assert!(dc.data().iter().all(|z| (z.re - 3.0).abs() < 1e-13 && z.im == 0.0));
    }

    #[test]
    fn sobolev_symbol_values() {
        let s = MultiplierSpec::PARABOLIC_SOBOLEV.symbol;
        let z = s(1.0, &[0.0]);
        assert!((z - Complex64::from_polar(1.0, PI / 4.0)).norm() < 1e-15);
        assert!((s(0.0, &[1.0]) - 1.0).norm() < 1e-15);
        assert!((s(0.0, &[0.0, 0.0]) - 1.0).norm() < 1e-15);
        let g = Grid::new(2, 1, 32, 32, 1.0, 1.0).unwrap();
        let sup = MultiplierSpec::PARABOLIC_SOBOLEV.sup_modulus(&g);
        assert!(sup <= 2f64.sqrt() + 1e-12, "{sup}");
    }

    #[test]
    fn series_operators() {
        let h =
            TimeSeries::from_fn(2.0 * PI, 64, |t| Complex64::new((3.0 * t).cos(), 0.0)).unwrap();
        let d = half_derivative_series(&h);
        for (a, b) in d.data().iter().zip(h.data()) {
            assert!((a - b * 3f64.sqrt()).norm() < 1e-12);
        }
        let hh = hilbert_series(&hilbert_series(&h));
        for (a, b) in hh.data().iter().zip(h.data()) {
            assert!((a + b).norm() < 1e-12);
        }
    }
}
