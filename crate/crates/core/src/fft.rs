//! Multi-dimensional FFTs over grid-ordered sample buffers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::grid::Grid;

type Plan = Arc<dyn Fft<f64>>;

fn plan(len: usize, direction: FftDirection) -> Plan {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let forward = direction == FftDirection::Forward;
    let mut cache = CACHE.get_or_init(Default::default).lock().unwrap();
    cache
        .entry((len, forward))
        .or_insert_with(|| FftPlanner::new().plan_fft(len, direction))
        .clone()
}

/// Which axes of the `(t, x_1, .., x_n)` box a transform acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axes {
    Time,
    Space,
    All,
}

impl Axes {
    fn list(self, n: usize) -> Vec<usize> {
        match self {
            Axes::Time => vec![0],
            Axes::Space => (1..=n).collect(),
            Axes::All => (0..=n).collect(),
        }
    }
}

/// In-place transform of `data` laid out as `(t, x.., component)` with `comps`
/// components. The inverse is normalized by the number of transformed samples.
pub fn transform(grid: &Grid, comps: usize, data: &mut [Complex64], axes: Axes, forward: bool) {
    let n = grid.n();
    let mut dims = vec![grid.nt()];
    dims.extend(std::iter::repeat_n(grid.nx(), n));
    dims.push(comps);
    transform_dims(&dims, &axes.list(n), data, forward);
}

/// Transform of a row-major array of shape `dims` along the listed axes.
pub fn transform_dims(dims: &[usize], axes: &[usize], data: &mut [Complex64], forward: bool) {
    let direction = if forward { FftDirection::Forward } else { FftDirection::Inverse };
    let mut scale = 1.0;
    for &axis in axes {
        let len = dims[axis];
        let stride: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        transform_axis(data, len, stride, outer, plan(len, direction));
        scale *= len as f64;
    }
    if !forward {
        let inv = 1.0 / scale;
        data.par_iter_mut().for_each(|z| *z *= inv);
    }
}

fn transform_axis(data: &mut [Complex64], len: usize, stride: usize, outer: usize, fft: Plan) {
    let block = len * stride;
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(block).take(outer).for_each(|chunk| {
        let mut lines = vec![Complex64::new(0.0, 0.0); block];
        {
            let src: &[Complex64] = chunk;
            lines.par_chunks_mut(len).enumerate().for_each_init(
                || vec![Complex64::new(0.0, 0.0); scratch_len],
                |scratch, (s, line)| {
                    for (k, z) in line.iter_mut().enumerate() {
                        *z = src[k * stride + s];
                    }
                    fft.process_with_scratch(line, scratch);
                },
            );
        }
        chunk.par_chunks_mut(stride).enumerate().for_each(|(k, row)| {
            for (s, z) in row.iter_mut().enumerate() {
                *z = lines[s * len + k];
            }
        });
    });
}

pub fn transform_series(data: &mut [Complex64], forward: bool) {
    let len = data.len();
    let direction = if forward { FftDirection::Forward } else { FftDirection::Inverse };
    plan(len, direction).process(data);
    if !forward {
        let inv = 1.0 / len as f64;
        data.iter_mut().for_each(|z| *z *= inv);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_lands_on_its_index() {
        let g = Grid::new(2, 1, 8, 4, 1.0, 1.0).unwrap();
        let mut data: Vec<Complex64> = (0..g.points())
            .map(|p| {
                let (it, ix) = g.split_index(p);
                let phase = 2.0 * PI * (3.0 * it as f64 / 8.0 - 1.0 * ix[1] as f64 / 4.0);
                Complex64::from_polar(1.0, phase)
            })
            .collect();
        transform(&g, 1, &mut data, Axes::All, true);
        let hit = g.point_index(3, &[0, 3]);
        for (p, z) in data.iter().enumerate() {
            let want = if p == hit { g.points() as f64 } else { 0.0 };
            assert!((z - want).norm() < 1e-9, "{p}: {z}");
        }
    }

    #[test]
    fn roundtrip_by_axes() {
        let g = Grid::new(2, 2, 4, 8, 1.0, 1.0).unwrap();
        let orig: Vec<Complex64> = (0..g.points() * 2)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        for axes in [Axes::Time, Axes::Space, Axes::All] {
            let mut d = orig.clone();
            transform(&g, 2, &mut d, axes, true);
            transform(&g, 2, &mut d, axes, false);
            for (a, b) in d.iter().zip(&orig) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }
}
