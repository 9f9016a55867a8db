use serde::{Deserialize, Serialize};

use super::{Field, Grid};
use crate::error::{Error, Result};

/// Half-open periodic time interval `[start, start + length)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    start: f64,
    length: f64,
}

impl TimeInterval {
    pub fn new(start: f64, length: f64) -> Result<Self> {
        if !(start.is_finite() && length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter(format!("interval start={start} length={length}")));
        }
        Ok(Self { start, length })
    }

    pub fn centered(center: f64, length: f64) -> Result<Self> {
        Self::new(center - 0.5 * length, length)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn center(&self) -> f64 {
        self.start + 0.5 * self.length
    }

    /// Same center, length multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let length = self.length * factor;
        Self { start: self.center() - 0.5 * length, length }
    }

    /// `I + k |I|`, start reduced to `[0, period)`.
    pub fn translated(&self, k: i64, period: f64) -> Self {
        let start = (self.start + k as f64 * self.length).rem_euclid(period);
        Self { start, length: self.length }
    }

    pub fn contains(&self, t: f64, period: f64) -> bool {
        (t - self.start).rem_euclid(period) < self.length
    }
}

/// Periodic sup-norm cube `prod [c_i - half, c_i + half)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    n: usize,
    center: [f64; 2],
    half: f64,
}

impl Cube {
    pub fn new(center: &[f64], half: f64) -> Result<Self> {
        if !(1..=2).contains(&center.len()) {
            return Err(Error::InvalidParameter("cube center must have 1 or 2 coordinates".into()));
        }
        if !(half.is_finite() && half > 0.0) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("cube half-width {half}")));
        }
        let mut c = [0.0; 2];
        c[..center.len()].copy_from_slice(center);
        Ok(Self { n: center.len(), center: c, half })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> &[f64] {
        &self.center[..self.n]
    }

    pub fn half(&self) -> f64 {
        self.half
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { half: self.half * factor, ..*self }
    }
}

/// Product of a time interval and a spatial cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub interval: TimeInterval,
    pub cube: Cube,
}

impl Region {
    pub fn new(interval: TimeInterval, cube: Cube) -> Self {
        Self { interval, cube }
    }

    pub fn footprint(&self, grid: &Grid) -> Result<Footprint> {
        if self.cube.n != grid.n() {
            return Err(Error::ShapeMismatch(format!(
                "cube in {} dimensions on a {}-dimensional grid",
                self.cube.n,
                grid.n()
            )));
        }
        let times = axis_indices(self.interval.start, self.interval.length, grid.dt(), grid.nt());
        let axis: Vec<Vec<usize>> = (0..grid.n())
            .map(|d| {
                axis_indices(
                    self.cube.center[d] - self.cube.half,
                    2.0 * self.cube.half,
                    grid.dx(),
                    grid.nx(),
                )
            })
            .collect();
        let spatial = if grid.n() == 1 {
            axis[0].clone()
        } else {
            let mut s = Vec::with_capacity(axis[0].len() * axis[1].len());
            for &i in &axis[0] {
                for &j in &axis[1] {
                    s.push(i * grid.nx() + j);
                }
            }
            s
        };
        Ok(Footprint { times, spatial, spatial_points: grid.spatial_points() })
    }
}

/// Grid points covered by a region, as a product of time and spatial index sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Footprint {
    pub times: Vec<usize>,
    pub spatial: Vec<usize>,
    spatial_points: usize,
}

impl Footprint {
    pub fn len(&self) -> usize {
        self.times.len() * self.spatial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> impl Iterator<Item = usize> + '_ {
        self.times
            .iter()
            .flat_map(move |&t| self.spatial.iter().map(move |&s| t * self.spatial_points + s))
    }
}

/// Indices `i` in `0..len` with `i * h` in the periodic interval `[start, start + length)`.
///
/// Positions are compared in units of `h` with a small slack so that
/// intervals whose ends are grid-aligned up to rounding behave as aligned.
pub(crate) fn axis_indices(start: f64, length: f64, h: f64, len: usize) -> Vec<usize> {
    const SLACK: f64 = 1e-9;
    let n = len as f64;
    let width = length / h;
    if width >= n - SLACK {
        return (0..len).collect();
    }
    let mut s0 = (start / h).rem_euclid(n);
    if s0 > n - SLACK {
        s0 = 0.0;
    }
    let first = (s0 - SLACK).ceil().max(0.0) as usize;
    let mut out = Vec::new();
    let mut i = first;
    while (i as f64) - s0 < width - SLACK {
        out.push(i % len);
        i += 1;
    }
    out
}

/// Parabolic cylinder `B = I x Q` with `|I| = rho r^2` and `Q` the sup-norm cube of
/// half-width `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCylinder {
    center_t: f64,
    n: usize,
    center_x: [f64; 2],
    radius: f64,
    rho: f64,
}

impl ParabolicCylinder {
    pub fn new(center_t: f64, center_x: &[f64], radius: f64, rho: f64) -> Result<Self> {
        if !(0.5..=2.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!("aspect rho={rho} not in [1/2, 2]")));
        }
        let cube = Cube::new(center_x, radius)?;
        if !center_t.is_finite() {
            return Err(Error::InvalidParameter("non-finite time center".into()));
        }
        Ok(Self { center_t, n: cube.n, center_x: cube.center, radius, rho })
    }

    pub fn standard(center_t: f64, center_x: &[f64], radius: f64) -> Result<Self> {
        Self::new(center_t, center_x, radius, 1.0)
    }

    pub fn center_t(&self) -> f64 {
        self.center_t
    }

    pub fn center_x(&self) -> &[f64] {
        &self.center_x[..self.n]
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn time_length(&self) -> f64 {
        self.rho * self.radius * self.radius
    }

    pub fn interval(&self) -> TimeInterval {
        TimeInterval { start: self.center_t - 0.5 * self.time_length(), length: self.time_length() }
    }

    pub fn cube(&self) -> Cube {
        Cube { n: self.n, center: self.center_x, half: self.radius }
    }

    pub fn region(&self) -> Region {
        Region::new(self.interval(), self.cube())
    }

    /// `gamma^2 I x gamma Q` without the wrap check.
    pub fn scaled_region(&self, gamma: f64) -> Region {
        Region::new(self.interval().scaled(gamma * gamma), self.cube().scaled(gamma))
    }

    /// Whether the cylinder fits in one period of the grid.
    pub fn fits(&self, grid: &Grid) -> bool {
        self.time_length() <= grid.period_t() * (1.0 + 1e-12)
            && 2.0 * self.radius <= grid.period_x() * (1.0 + 1e-12)
    }
}

/// `gamma B = gamma^2 I x gamma Q`, refused when it would wrap around a period.
pub fn dilate(b: &ParabolicCylinder, gamma: f64, grid: &Grid) -> Result<ParabolicCylinder> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("dilation factor {gamma}")));
    }
    let out = ParabolicCylinder { radius: b.radius * gamma, ..*b };
    if !out.fits(grid) {
        return Err(Error::WrapsPeriod);
    }
    Ok(out)
}

/// `I_k = k |I| + I` for the time interval of `b`, start reduced to `[0, T)`.
pub fn translate_interval(b: &ParabolicCylinder, k: i64, period: f64) -> TimeInterval {
    b.interval().translated(k, period)
}

/// `(mean over the region of |u|^p)^{1/p}` with `|u|` the Euclidean norm over components.
pub fn region_average(u: &Field, region: &Region, p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidExponent(format!("average exponent {p} not in [1, inf)")));
    }
    let fp = region.footprint(u.grid())?;
    if fp.is_empty() {
        return Err(Error::EmptyFootprint);
    }
    let sum: f64 = if p == 1.0 {
        fp.points().map(|q| u.magnitude_at(q)).sum()
    } else if p == 2.0 {
        fp.points().map(|q| u.at(q).iter().map(|z| z.norm_sqr()).sum::<f64>()).sum()
    } else {
        fp.points().map(|q| u.magnitude_at(q).powf(p)).sum()
    };
    Ok((sum / fp.len() as f64).powf(1.0 / p))
}

pub fn cylinder_average(u: &Field, b: &ParabolicCylinder, p: f64) -> Result<f64> {
    region_average(u, &b.region(), p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Shape;
    use num_complex::Complex64;

    fn grid() -> Grid {
        Grid::new(1, 1, 64, 64, 1.0, 1.0).unwrap()
    }

    #[test]
    fn axis_indices_wrap_and_align() {
        assert_eq!(axis_indices(0.0, 0.25, 1.0 / 8.0, 8), vec![0, 1]);
        assert_eq!(axis_indices(-0.25, 0.5, 1.0 / 8.0, 8), vec![6, 7, 0, 1]);
        assert_eq!(axis_indices(0.3, 0.1, 0.01, 100).len(), 10);
        assert_eq!(axis_indices(0.0, 2.0, 0.5, 2), vec![0, 1]);
        assert!(axis_indices(0.01, 0.005, 0.1, 10).is_empty());
    }

    #[test]
    fn constant_average() {
        let u = Field::constant(grid(), Shape::Scalar, Complex64::new(3.0, 0.0));
        let b = ParabolicCylinder::standard(0.5, &[0.5], 0.25).unwrap();
        for p in [1.0, 1.5, 2.0, 4.0] {
            assert!((cylinder_average(&u, &b, p).unwrap() - 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn half_indicator_average() {
        let g = grid();
        let b = ParabolicCylinder::standard(0.5, &[0.5], 0.5).unwrap();
        let u = Field::from_fn(g, Shape::Scalar, |t, _, _| {
            Complex64::new(if t < 0.5 { 1.0 } else { 0.0 }, 0.0)
        });
        assert!((cylinder_average(&u, &b, 1.0).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn tiny_cylinder_is_refused() {
        let u = Field::zeros(grid(), Shape::Scalar);
        let b = ParabolicCylinder::standard(0.5 + 1.0 / 256.0, &[0.5], 1e-3).unwrap();
        assert!(matches!(cylinder_average(&u, &b, 1.0), Err(Error::EmptyFootprint)));
    }

    #[test]
    fn dilate_refuses_wrap() {
        let b = ParabolicCylinder::standard(0.5, &[0.5], 0.4).unwrap();
        assert!(dilate(&b, 1.2, &grid()).is_ok());
        assert!(matches!(dilate(&b, 2.0, &grid()), Err(Error::WrapsPeriod)));
    }

    #[test]
    fn translation_reduces_start() {
        let i = TimeInterval::new(0.5, 0.25).unwrap();
        assert!((i.translated(3, 1.0).start() - 0.25).abs() < 1e-15);
        assert!((i.translated(-3, 1.0).start() - 0.75).abs() < 1e-15);
        let j = TimeInterval::new(7.0, 1.0).unwrap().translated(2, 8.0);
        assert_eq!((j.start(), j.length()), (1.0, 1.0));
        let b = ParabolicCylinder::standard(0.5, &[0.0], 1.0).unwrap();
        let k = translate_interval(&b, 3, 8.0);
        assert_eq!((k.start(), k.length()), (3.0, 1.0));
    }

    #[test]
    fn footprint_two_dimensional() {
        let g = Grid::new(2, 1, 16, 16, 1.0, 1.0).unwrap();
        let b = ParabolicCylinder::standard(0.0, &[0.0, 0.0], 0.25).unwrap();
        let fp = b.region().footprint(&g).unwrap();
        assert_eq!(fp.times.len(), 1);
        assert_eq!(fp.spatial.len(), 64);
    }
}
