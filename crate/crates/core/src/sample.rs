//! Random band-limited fields, smooth cut-offs and cylinder families.
//!
//! Random fields are defined by their physical Fourier modes, not by grid
//! samples, so the same seed describes the same function at every resolution
//! fine enough to carry its band.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{self, Axes};
use crate::grid::{Field, Grid, ParabolicCylinder, Region, Shape, TimeSeries};
use crate::rng::Rng;

/// Which low modes a random field leaves out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanMode {
    Keep,
    /// No constant mode.
    ZeroMean,
    /// No modes constant in time.
    ZeroTimeMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandLimited {
    pub kt_max: usize,
    pub kx_max: usize,
    pub real: bool,
    pub mean: MeanMode,
    /// Coefficients scale like `(1 + |k|)^{-decay}`.
    pub decay: f64,
}

impl Default for BandLimited {
    fn default() -> Self {
        Self { kt_max: 4, kx_max: 4, real: false, mean: MeanMode::Keep, decay: 1.0 }
    }
}

impl BandLimited {
    pub fn new(kt_max: usize, kx_max: usize) -> Self {
        Self { kt_max, kx_max, ..Self::default() }
    }

    pub fn real(mut self) -> Self {
        self.real = true;
        self
    }

    pub fn mean(mut self, mean: MeanMode) -> Self {
        self.mean = mean;
        self
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        if 2 * self.kt_max >= grid.nt() || 2 * self.kx_max >= grid.nx() {
            return Err(Error::InvalidParameter(format!(
                "band ({}, {}) not resolved on {}x{} grid",
                self.kt_max,
                self.kx_max,
                grid.nt(),
                grid.nx()
            )));
        }
        Ok(())
    }

    fn modes(&self, n: usize) -> Vec<(i64, [i64; 2])> {
        let kt = self.kt_max as i64;
        let kx = self.kx_max as i64;
        let mut out = Vec::new();
        for a in -kt..=kt {
            for b in -kx..=kx {
                for c in if n == 2 { -kx..=kx } else { 0..=0 } {
                    let skip = match self.mean {
                        MeanMode::Keep => false,
                        MeanMode::ZeroMean => a == 0 && b == 0 && c == 0,
                        MeanMode::ZeroTimeMean => a == 0,
                    };
                    if !skip {
                        out.push((a, [b, c]));
                    }
                }
            }
        }
        out
    }

    /// Draws a field of the given shape.
    pub fn sample(&self, grid: &Grid, shape: Shape, rng: &mut Rng) -> Result<Field> {
        self.check(grid)?;
        let comps = shape.comps(grid);
        let n = grid.n();
        let mut hat = vec![Complex64::new(0.0, 0.0); grid.points() * comps];
        let scale = grid.points() as f64;
        for (kt, kx) in self.modes(n) {
            let mag = ((kt * kt + kx[0] * kx[0] + kx[1] * kx[1]) as f64).sqrt();
            let w = (1.0 + mag).powf(-self.decay);
            let it = kt.rem_euclid(grid.nt() as i64) as usize;
            let ix: Vec<usize> =
                (0..n).map(|d| kx[d].rem_euclid(grid.nx() as i64) as usize).collect();
            let p = grid.point_index(it, &ix);
            for c in 0..comps {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                hat[p * comps + c] = z * w * scale;
            }
        }
        fft::transform(grid, comps, &mut hat, Axes::All, false);
        if self.real {
            hat.iter_mut().for_each(|z| z.im = 0.0);
        }
        Field::from_vec(*grid, shape, hat)
    }

    /// Draws a function of time alone.
    pub fn sample_series(&self, period: f64, len: usize, rng: &mut Rng) -> Result<TimeSeries> {
        if 2 * self.kt_max >= len {
            return Err(Error::InvalidParameter("band not resolved".into()));
        }
        let kt = self.kt_max as i64;
        let mut hat = vec![Complex64::new(0.0, 0.0); len];
        for k in -kt..=kt {
            if k == 0 && self.mean != MeanMode::Keep {
                continue;
            }
            let w = (1.0 + k.abs() as f64).powf(-self.decay);
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            hat[k.rem_euclid(len as i64) as usize] = z * w * len as f64;
        }
        fft::transform_series(&mut hat, false);
        if self.real {
            hat.iter_mut().for_each(|z| z.im = 0.0);
        }
        TimeSeries::new(period, hat)
    }
}

/// Smooth approximation of the indicator of a space-time box: a product of
/// erf-smoothed one-dimensional boxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub center_t: f64,
    pub center_x: [f64; 2],
    pub half_t: f64,
    pub half_x: f64,
    pub width_t: f64,
    pub width_x: f64,
}

/// Values below this count as outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

pub(crate) fn smooth_box(s: f64, center: f64, half: f64, width: f64, period: f64) -> f64 {
    let d = (s - center + 0.5 * period).rem_euclid(period) - 0.5 * period;
    0.5 * (libm::erf((d + half) / width) - libm::erf((d - half) / width))
}

impl Cutoff {
    pub fn value(&self, t: f64, x: &[f64], grid: &Grid) -> f64 {
        let mut v = smooth_box(t, self.center_t, self.half_t, self.width_t, grid.period_t());
        for (d, &xd) in x.iter().enumerate() {
            v *= smooth_box(xd, self.center_x[d], self.half_x, self.width_x, grid.period_x());
        }
        v
    }

    pub fn field(&self, grid: &Grid) -> Field {
        Field::from_fn(*grid, Shape::Density, |t, x, _| Complex64::new(self.value(t, x, grid), 0.0))
    }

    /// Checks that every sample with value above [`SUPPORT_THRESHOLD`] lies in `omega`.
    pub fn check_support(&self, grid: &Grid, omega: &Region) -> Result<()> {
        check_support(&self.field(grid), omega)
    }
}

/// Checks that every sample of the one-component field `chi` with real part
/// above [`SUPPORT_THRESHOLD`] lies in `omega`.
pub fn check_support(chi: &Field, omega: &Region) -> Result<()> {
    let grid = chi.grid();
    let inside: std::collections::HashSet<usize> = omega.footprint(grid)?.points().collect();
    for p in 0..grid.points() {
        let c = chi.at(p)[0].re;
        if c > SUPPORT_THRESHOLD && !inside.contains(&p) {
            let (it, ix) = grid.split_index(p);
            return Err(Error::SupportCheck(format!(
                "cut-off is {:.3e} at t={}, x={:?} outside the declared domain",
                c,
                grid.time_of(it),
                ix[..grid.n()].iter().map(|&i| grid.space_of(i)).collect::<Vec<_>>()
            )));
        }
    }
    Ok(())
}

/// Random cylinders of radius in `[r_min, r_max]` (log-uniform) whose `gamma`
/// dilate fits in one period, optionally confined to `within` (by center).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderFamily {
    pub count: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub gamma: f64,
    pub rho: f64,
}

impl CylinderFamily {
    pub fn sample(
        &self,
        grid: &Grid,
        within: Option<&Region>,
        rng: &mut Rng,
    ) -> Result<Vec<ParabolicCylinder>> {
        if !(self.r_min > 0.0 && self.r_max >= self.r_min && self.gamma >= 1.0) {
            return Err(Error::InvalidParameter("cylinder family radii or gamma".into()));
        }
        let g2 = self.gamma * self.gamma;
        if g2 * self.rho * self.r_min * self.r_min > grid.period_t()
            || 2.0 * self.gamma * self.r_min > grid.period_x()
        {
            return Err(Error::WrapsPeriod);
        }
        let mut out = Vec::with_capacity(self.count);
        let mut attempts = 0;
        while out.len() < self.count {
            attempts += 1;
            if attempts > 1000 * self.count.max(1) {
                return Err(Error::InvalidParameter("could not place cylinder family".into()));
            }
            let r = if self.r_max > self.r_min {
                (rng.random_range(self.r_min.ln()..self.r_max.ln())).exp()
            } else {
                self.r_min
            };
            let (t0, tl, x0, xl) = match within {
                Some(reg) => (
                    reg.interval.start(),
                    reg.interval.length(),
                    reg.cube.center().iter().map(|c| c - reg.cube.half()).collect::<Vec<_>>(),
                    2.0 * reg.cube.half(),
                ),
                None => (0.0, grid.period_t(), vec![0.0; grid.n()], grid.period_x()),
            };
            let ct = t0 + rng.random_range(0.0..1.0) * tl;
            let cx: Vec<f64> = x0.iter().map(|&a| a + rng.random_range(0.0..1.0) * xl).collect();
            let b = ParabolicCylinder::new(ct, &cx, r, self.rho)?;
            if b.time_length() * g2 <= grid.period_t() && 2.0 * r * self.gamma <= grid.period_x() {
                out.push(b);
            }
        }
        Ok(out)
    }
}

/// `2 pi k / P` for integer `k`.
pub fn angular(k: i64, period: f64) -> f64 {
    2.0 * PI * k as f64 / period
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn band_limited_is_resolution_independent() {
        let band = BandLimited::new(3, 2).real();
        let g64 = Grid::new(1, 1, 16, 16, 2.0, 1.0).unwrap();
        let g128 = g64.with_resolution(32, 32).unwrap();
        let a = band.sample(&g64, Shape::Scalar, &mut stream(1, "f")).unwrap();
        let b = band.sample(&g128, Shape::Scalar, &mut stream(1, "f")).unwrap();
        for p in 0..g64.points() {
            let (it, ix) = g64.split_index(p);
            let q = g128.point_index(2 * it, &[2 * ix[0]]);
            assert!((a.data()[p] - b.data()[q]).norm() < 1e-12);
        }
        assert!(a.data().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn zero_time_mean() {
        let g = Grid::new(2, 2, 16, 8, 1.0, 1.0).unwrap();
        let u = BandLimited::new(3, 2)
            .mean(MeanMode::ZeroTimeMean)
            .sample(&g, Shape::Scalar, &mut stream(3, "u"))
            .unwrap();
        let sp = g.spatial_points() * 2;
        for j in 0..sp {
            let s: Complex64 = (0..g.nt()).map(|it| u.data()[it * sp + j]).sum();
            assert!(s.norm() < 1e-12);
        }
    }

    #[test]
    fn cutoff_values_and_support() {
        let g = Grid::new(1, 1, 64, 64, 1.0, 1.0).unwrap();
        let c = Cutoff {
            center_t: 0.5,
            center_x: [0.5, 0.0],
            half_t: 0.2,
            half_x: 0.2,
            width_t: 0.03,
            width_x: 0.03,
        };
        assert!((c.value(0.5, &[0.5], &g) - 1.0).abs() < 1e-12);
        assert!(c.value(0.0, &[0.5], &g) < 1e-30);
        let chi = c.field(&g);
        assert!(chi.data().iter().all(|z| (0.0..=1.0).contains(&z.re)));
        let wide = Region::new(
            crate::grid::TimeInterval::centered(0.5, 0.8).unwrap(),
            crate::grid::Cube::new(&[0.5], 0.4).unwrap(),
        );
        assert!(c.check_support(&g, &wide).is_ok());
        let narrow = Region::new(
            crate::grid::TimeInterval::centered(0.5, 0.4).unwrap(),
            crate::grid::Cube::new(&[0.5], 0.4).unwrap(),
        );
        assert!(matches!(c.check_support(&g, &narrow), Err(Error::SupportCheck(_))));
    }

    #[test]
    fn families_fit() {
        let g = Grid::new(2, 1, 64, 64, 1.0, 1.0).unwrap();
        let fam = CylinderFamily { count: 40, r_min: 0.05, r_max: 0.3, gamma: 2.0, rho: 1.0 };
        let bs = fam.sample(&g, None, &mut stream(5, "cyl")).unwrap();
        assert_eq!(bs.len(), 40);
        for b in bs {
            assert!(crate::grid::dilate(&b, 2.0, &g).is_ok());
        }
    }
}
