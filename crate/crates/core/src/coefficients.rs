//! Coefficient tensors `A(t, x)` acting on gradients in `C^{mn}`, with
//! Gårding checks and the extension of locally given coefficients to the
//! whole box.
//!
//! Coefficients are stored as a table of distinct matrices plus one table
//! index per grid point; all generated families are piecewise constant on
//! physical blocks, so the table stays small at every resolution.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{Cube, Field, Grid, Shape};
use crate::rng::{self, Rng};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    Constant,
    TimeCheckerboard,
    SpacetimeRandom,
    ComplexSkew,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientParams {
    /// Pointwise lower bound of the Hermitian part.
    pub lambda: f64,
    /// Largest Hermitian eigenvalue is `contrast * lambda`.
    pub contrast: f64,
    /// Block length in time.
    pub cell_t: f64,
    /// Block side in space; `None` makes the coefficients constant in space.
    pub cell_x: Option<f64>,
    /// Norm of the skew-Hermitian part relative to `lambda` (complex_skew only).
    pub skew: f64,
    /// Declared bound on `sup |A|`.
    pub bound: Option<f64>,
}

impl Default for CoefficientParams {
    fn default() -> Self {
        Self { lambda: 1.0, contrast: 5.0, cell_t: 0.125, cell_x: None, skew: 1.0, bound: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientMeta {
    pub lambda: f64,
    pub kappa: f64,
    pub sup_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    grid: Grid,
    dim: usize,
    table: Vec<Complex64>,
    index: Vec<u32>,
    meta: CoefficientMeta,
}

fn to_matrix(entries: &[Complex64], d: usize) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(d, d, entries)
}

fn from_matrix(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let d = m.nrows();
    (0..d * d).map(|k| m[(k / d, k % d)]).collect()
}

/// Smallest eigenvalue of the Hermitian part of a row-major `d x d` matrix.
pub fn hermitian_min_eig(entries: &[Complex64], d: usize) -> f64 {
    let m = to_matrix(entries, d);
    let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Operator 2-norm of a row-major `d x d` matrix.
pub fn spectral_norm(entries: &[Complex64], d: usize) -> f64 {
    to_matrix(entries, d).singular_values().iter().cloned().fold(0.0, f64::max)
}

fn identity(d: usize, s: f64) -> Vec<Complex64> {
    (0..d * d).map(|k| if k / d == k % d { ONE * s } else { ZERO }).collect()
}

fn random_unitary(d: usize, rng: &mut Rng) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    g.qr().q()
}

/// `U diag(eigs) U^*` for a random unitary `U`.
fn random_hermitian(d: usize, lo: f64, hi: f64, rng: &mut Rng) -> DMatrix<Complex64> {
    let u = random_unitary(d, rng);
    let eigs: Vec<Complex64> = (0..d)
        .map(|i| {
            let e = match i {
                0 if d == 1 => rng.random_range(lo..=hi),
                0 => lo,
                1 => hi,
                _ => rng.random_range(lo..=hi),
            };
            Complex64::new(e, 0.0)
        })
        .collect();
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eigs));
    &u * diag * u.adjoint()
}

fn block_coordinate(s: f64, cell: f64, period: f64) -> usize {
    let count = (period / cell - 1e-9).ceil().max(1.0) as usize;
    ((s / cell + 1e-9).floor() as usize).min(count - 1)
}

impl CoefficientField {
    /// Builds coefficients from a matrix table and a per-point table index.
    pub fn from_table(
        grid: Grid,
        table: Vec<Complex64>,
        index: Vec<u32>,
        lambda: f64,
        kappa: f64,
    ) -> Result<Self> {
        let dim = grid.m() * grid.n();
        let entries = dim * dim;
        if table.is_empty() || !table.len().is_multiple_of(entries) || index.len() != grid.points()
        {
            return Err(Error::ShapeMismatch("coefficient table or index size".into()));
        }
        let count = table.len() / entries;
        if index.iter().any(|&i| i as usize >= count) {
            return Err(Error::ShapeMismatch("coefficient index out of range".into()));
        }
        if table.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        let mut used = vec![false; count];
        index.iter().for_each(|&i| used[i as usize] = true);
        let sup_norm = (0..count)
            .filter(|&k| used[k])
            .map(|k| spectral_norm(&table[k * entries..(k + 1) * entries], dim))
            .fold(0.0, f64::max);
        Ok(Self { grid, dim, table, index, meta: CoefficientMeta { lambda, kappa, sup_norm } })
    }

    /// Builds coefficients from a matrix-valued function sampled at every point.
    pub fn from_fn(
        grid: Grid,
        lambda: f64,
        kappa: f64,
        f: impl Fn(f64, &[f64]) -> Vec<Complex64>,
    ) -> Result<Self> {
        let field = Field::from_fn(grid, Shape::Matrix, {
            let dim = grid.m() * grid.n();
            move |t, x, c| {
                let m = f(t, x);
                if m.len() == dim * dim {
                    m[c]
                } else {
                    Complex64::new(f64::NAN, 0.0)
                }
            }
        });
        Self::from_field(&field, lambda, kappa)
    }

    /// Imports a matrix-shaped field, merging bitwise-identical matrices.
    pub fn from_field(field: &Field, lambda: f64, kappa: f64) -> Result<Self> {
        if field.shape() != Shape::Matrix {
            return Err(Error::ShapeMismatch("coefficients need a matrix field".into()));
        }
        let grid = *field.grid();
        let mut seen: HashMap<Vec<u64>, u32> = HashMap::new();
        let mut table = Vec::new();
        let mut index = Vec::with_capacity(grid.points());
        for p in 0..grid.points() {
            let m = field.at(p);
            let key: Vec<u64> = m.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect();
            let next = seen.len() as u32;
            let k = *seen.entry(key).or_insert_with(|| {
                table.extend_from_slice(m);
                next
            });
            index.push(k);
        }
        Self::from_table(grid, table, index, lambda, kappa)
    }

    pub fn generate(
        grid: Grid,
        kind: CoefficientKind,
        params: &CoefficientParams,
        seed: u64,
    ) -> Result<Self> {
        let p = params;
        if !(p.lambda > 0.0 && p.contrast >= 1.0 && p.cell_t > 0.0 && p.skew >= 0.0) {
            return Err(Error::InvalidParameter(
                "coefficients need lambda > 0, contrast >= 1, cell_t > 0, skew >= 0".into(),
            ));
        }
        if let Some(cx) = p.cell_x {
            if !(cx > 0.0) {
                return Err(Error::InvalidParameter("cell_x must be positive".into()));
            }
        }
        let dim = grid.m() * grid.n();
        let n = grid.n();
        let nbx = p
            .cell_x
            .map(|c| block_coordinate(grid.period_x() - 1e-12, c, grid.period_x()) + 1)
            .unwrap_or(1);
        let block_of = |q: usize| -> (usize, usize) {
            let (it, ix) = grid.split_index(q);
            let bt = block_coordinate(grid.time_of(it), p.cell_t, grid.period_t());
            let mut bx = 0;
            let mut parity = bt;
            if let Some(cx) = p.cell_x {
                for &i in ix.iter().take(n) {
                    let b = block_coordinate(grid.space_of(i), cx, grid.period_x());
                    bx = bx * nbx + b;
                    parity += b;
                }
            }
            (bt * nbx.pow(n as u32) + bx, parity % 2)
        };
        let mut table: Vec<Complex64> = Vec::new();
        let mut slot: HashMap<usize, u32> = HashMap::new();
        let mut index = Vec::with_capacity(grid.points());
        let lam = p.lambda;
        let hi = p.contrast * lam;
        for q in 0..grid.points() {
            let (block, parity) = block_of(q);
            let key = match kind {
                CoefficientKind::Constant => 0,
                CoefficientKind::TimeCheckerboard => parity,
                _ => block,
            };
            let next = slot.len() as u32;
            let k = *slot.entry(key).or_insert_with(|| {
                let m = match kind {
                    CoefficientKind::Constant => identity(dim, lam),
                    CoefficientKind::TimeCheckerboard => {
                        identity(dim, if parity == 0 { lam } else { hi })
                    }
                    CoefficientKind::SpacetimeRandom => {
                        let mut r = rng::substream(seed, "coefficients", block as u64);
                        from_matrix(&random_hermitian(dim, lam, hi, &mut r))
                    }
                    CoefficientKind::ComplexSkew => {
                        let mut r = rng::substream(seed, "coefficients", block as u64);
                        let h = random_hermitian(dim, lam, hi, &mut r);
                        let s = random_hermitian(dim, -1.0, 1.0, &mut r);
                        let s = s * Complex64::new(0.0, p.skew * lam);
                        from_matrix(&(h + s))
                    }
                };
                table.extend(m);
                next
            });
            index.push(k);
        }
        let out = Self::from_table(grid, table, index, lam, 0.0)?;
        if let Some(bound) = p.bound {
            if out.meta.sup_norm > bound * (1.0 + 1e-12) {
                return Err(Error::BoundExceeded { declared: bound, actual: out.meta.sup_norm });
            }
        }
        Ok(out)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `mn`, the side of each matrix.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn meta(&self) -> &CoefficientMeta {
        &self.meta
    }

    pub fn lambda(&self) -> f64 {
        self.meta.lambda
    }

    pub fn kappa(&self) -> f64 {
        self.meta.kappa
    }

    pub fn sup_norm(&self) -> f64 {
        self.meta.sup_norm
    }

    pub fn with_meta(mut self, lambda: f64, kappa: f64) -> Self {
        self.meta.lambda = lambda;
        self.meta.kappa = kappa;
        self
    }

    pub fn table_len(&self) -> usize {
        self.table.len() / (self.dim * self.dim)
    }

    pub fn table_entry(&self, k: usize) -> &[Complex64] {
        let e = self.dim * self.dim;
        &self.table[k * e..(k + 1) * e]
    }

    pub fn index(&self) -> &[u32] {
        &self.index
    }

    pub fn matrix_at(&self, p: usize) -> &[Complex64] {
        self.table_entry(self.index[p] as usize)
    }

    pub fn to_field(&self) -> Field {
        let data = (0..self.grid.points()).flat_map(|p| self.matrix_at(p).to_vec()).collect();
        Field::from_parts_unchecked(self.grid, Shape::Matrix, data)
    }

    /// `A g` pointwise for gradient data with `mn` components per point.
    pub fn apply_data(&self, g: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim;
        let mut out = vec![ZERO; g.len()];
        out.par_chunks_mut(d).enumerate().for_each(|(p, o)| {
            let a = self.matrix_at(p);
            let gp = &g[p * d..(p + 1) * d];
            for r in 0..d {
                o[r] = (0..d).map(|c| a[r * d + c] * gp[c]).sum();
            }
        });
        out
    }

    pub fn apply(&self, grad: &Field) -> Result<Field> {
        self.grid.ensure_same(grad.grid())?;
        if grad.shape() != Shape::Vector {
            return Err(Error::ShapeMismatch("coefficients act on vector fields".into()));
        }
        Ok(Field::from_parts_unchecked(self.grid, Shape::Vector, self.apply_data(grad.data())))
    }

    /// Minimum over all points of the smallest Hermitian-part eigenvalue.
    pub fn pointwise_lambda(&self) -> f64 {
        let mut used = vec![false; self.table_len()];
        self.index.iter().for_each(|&i| used[i as usize] = true);
        (0..self.table_len())
            .filter(|&k| used[k])
            .map(|k| hermitian_min_eig(self.table_entry(k), self.dim))
            .fold(f64::INFINITY, f64::min)
    }

    /// Replaces the matrix at every point where `pred(t, x)` holds.
    pub fn with_override(
        &self,
        pred: impl Fn(f64, &[f64]) -> bool,
        matrix: &[Complex64],
    ) -> Result<Self> {
        if matrix.len() != self.dim * self.dim {
            return Err(Error::ShapeMismatch("override matrix size".into()));
        }
        let mut table = self.table.clone();
        let k = self.table_len() as u32;
        table.extend_from_slice(matrix);
        let g = self.grid;
        let mut x = [0.0; 2];
        let index = (0..g.points())
            .map(|p| {
                let (it, ix) = g.split_index(p);
                for d in 0..g.n() {
                    x[d] = g.space_of(ix[d]);
                }
                if pred(g.time_of(it), &x[..g.n()]) {
                    k
                } else {
                    self.index[p]
                }
            })
            .collect();
        Self::from_table(g, table, index, self.meta.lambda, self.meta.kappa)
    }

    /// Distinct time slices as `(representative slice, all slices with the same matrices)`.
    fn distinct_slices(&self) -> Vec<usize> {
        let sp = self.grid.spatial_points();
        let mut seen: HashMap<&[u32], usize> = HashMap::new();
        let mut out = Vec::new();
        for it in 0..self.grid.nt() {
            let sig = &self.index[it * sp..(it + 1) * sp];
            if !seen.contains_key(sig) {
                seen.insert(sig, it);
                out.push(it);
            }
        }
        out
    }
}

/// A function of space alone placed at one time slice, laid out `(x.., component)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceFunction {
    pub slice: usize,
    pub data: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct GardingReport {
    pub lambda_est: f64,
    pub kappa: f64,
    pub trials: usize,
    pub exact: bool,
    pub witness: SliceFunction,
}

fn slice_dims(grid: &Grid, comps: usize) -> Vec<usize> {
    let mut dims = vec![grid.nx(); grid.n()];
    dims.push(comps);
    dims
}

/// Spatial gradient of one slice, output component `c * n + i`.
fn slice_gradient(grid: &Grid, comps: usize, data: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let axes: Vec<usize> = (0..n).collect();
    let mut hat = data.to_vec();
    fft::transform_dims(&slice_dims(grid, comps), &axes, &mut hat, true);
    let sp = grid.spatial_points();
    let mut out = vec![ZERO; sp * comps * n];
    for j in 0..sp {
        let ix = if n == 1 { [j, 0] } else { [j / grid.nx(), j % grid.nx()] };
        for c in 0..comps {
            for i in 0..n {
                out[(j * comps + c) * n + i] =
                    Complex64::new(0.0, grid.space_frequency(ix[i])) * hat[j * comps + c];
            }
        }
    }
    fft::transform_dims(&slice_dims(grid, comps * n), &axes, &mut out, false);
    out
}

/// `(Re int A grad u . conj grad u, int |grad u|^2, int |u|^2)` on slice `it`.
pub fn slice_form(a: &CoefficientField, it: usize, u: &[Complex64]) -> (f64, f64, f64) {
    let g = a.grid();
    let d = a.dim();
    let sp = g.spatial_points();
    let grad = slice_gradient(g, g.m(), u);
    let dv = g.spatial_cell_volume();
    let mut form = 0.0;
    let mut gg = 0.0;
    for j in 0..sp {
        let m = a.matrix_at(it * sp + j);
        let gj = &grad[j * d..(j + 1) * d];
        for r in 0..d {
            let ag: Complex64 = (0..d).map(|c| m[r * d + c] * gj[c]).sum();
            form += (ag * gj[r].conj()).re;
        }
        gg += gj.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    let uu: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    (form * dv, gg * dv, uu * dv)
}

fn random_slice_function(grid: &Grid, trial: usize, rng: &mut Rng) -> Vec<Complex64> {
    let m = grid.m();
    let n = grid.n();
    let sp = grid.spatial_points();
    let kmax = (grid.nx() / 4).max(1) as i64;
    if trial.is_multiple_of(2) {
        let dims = slice_dims(grid, m);
        let mut hat = vec![ZERO; sp * m];
        for j in 0..sp {
            let ix = if n == 1 { [j, 0] } else { [j / grid.nx(), j % grid.nx()] };
            let inside = ix[..n].iter().all(|&i| Grid::wavenumber(i, grid.nx()).abs() <= kmax);
            for c in 0..m {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                if inside {
                    hat[j * m + c] = z;
                }
            }
        }
        let axes: Vec<usize> = (0..n).collect();
        fft::transform_dims(&dims, &axes, &mut hat, false);
        hat
    } else {
        let l = grid.period_x();
        let dx = grid.dx();
        let w = (rng.random_range((2.0 * dx).ln()..(l / 8.0).max(2.5 * dx).ln())).exp();
        let center: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..l)).collect();
        let k: Vec<f64> = (0..n)
            .map(|_| 2.0 * std::f64::consts::PI * rng.random_range(-kmax..=kmax) as f64 / l)
            .collect();
        let amp: Vec<Complex64> = (0..m)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut out = vec![ZERO; sp * m];
        for j in 0..sp {
            let ix = if n == 1 { [j, 0] } else { [j / grid.nx(), j % grid.nx()] };
            let mut r2 = 0.0;
            let mut phase = 0.0;
            for d in 0..n {
                let x = grid.space_of(ix[d]);
                let dd = (x - center[d] + 0.5 * l).rem_euclid(l) - 0.5 * l;
                r2 += dd * dd;
                phase += k[d] * x;
            }
            let env = (-0.5 * r2 / (w * w)).exp();
            for c in 0..m {
                out[j * m + c] = amp[c] * Complex64::from_polar(env, phase);
            }
        }
        out
    }
}

/// Sampled Gårding check with the declared `kappa`: the minimum over random
/// trial functions of `(Re int A grad u . conj grad u + kappa int |u|^2) / int |grad u|^2`.
pub fn verify_garding(a: &CoefficientField, trials: usize, seed: u64) -> GardingReport {
    verify_garding_with(a, a.kappa(), trials, seed)
}

pub fn verify_garding_with(
    a: &CoefficientField,
    kappa: f64,
    trials: usize,
    seed: u64,
) -> GardingReport {
    let slices = a.distinct_slices();
    let results: Vec<(f64, SliceFunction)> = (0..trials.max(1))
        .into_par_iter()
        .map(|trial| {
            let mut r = rng::substream(seed, "garding", trial as u64);
            let it = slices[r.random_range(0..slices.len())];
            let u = random_slice_function(a.grid(), trial, &mut r);
            let (form, gg, uu) = slice_form(a, it, &u);
            let ratio = if gg > 0.0 { (form + kappa * uu) / gg } else { f64::INFINITY };
            (ratio, SliceFunction { slice: it, data: u })
        })
        .collect();
    let (lambda_est, witness) = results
        .into_iter()
        .fold(None::<(f64, SliceFunction)>, |best, cur| match best {
            Some(b) if b.0 <= cur.0 => Some(b),
            _ => Some(cur),
        })
        .expect("at least one trial");
    GardingReport { lambda_est, kappa, trials: trials.max(1), exact: false, witness }
}

/// Largest side of the Fourier basis accepted by the exact modes.
pub const EXACT_MAX_NX: usize = 64;

/// Hermitian-part form matrix `Q` on Fourier modes of slice `it` (n = 1),
/// with modes ordered by FFT index and components fastest.
fn mode_form_matrix(a: &CoefficientField, it: usize) -> DMatrix<Complex64> {
    let g = a.grid();
    let nx = g.nx();
    let m = g.m();
    let dx = g.dx();
    let herm: Vec<DMatrix<Complex64>> = (0..nx)
        .map(|j| {
            let mm = to_matrix(a.matrix_at(it * nx + j), m);
            (&mm + mm.adjoint()) * Complex64::new(0.5, 0.0)
        })
        .collect();
    let ahat: Vec<DMatrix<Complex64>> = (0..nx)
        .map(|q| {
            let mut s = DMatrix::zeros(m, m);
            for (j, h) in herm.iter().enumerate() {
                let ph = 2.0 * std::f64::consts::PI * ((q * j) % nx) as f64 / nx as f64;
                s += h * Complex64::from_polar(dx, ph);
            }
            s
        })
        .collect();
    let size = nx * m;
    let mut qm = DMatrix::zeros(size, size);
    for k in 0..nx {
        for l in 0..nx {
            let w = g.space_frequency(k) * g.space_frequency(l);
            if w == 0.0 {
                continue;
            }
            let blk = &ahat[(l + nx - k) % nx];
            for al in 0..m {
                for be in 0..m {
                    qm[(k * m + al, l * m + be)] = blk[(al, be)] * w;
                }
            }
        }
    }
    qm
}

fn check_exact(a: &CoefficientField) -> Result<()> {
    let g = a.grid();
    if g.n() != 1 || g.nx() > EXACT_MAX_NX {
        return Err(Error::InvalidParameter(format!(
            "exact Gårding mode needs n = 1 and N_x <= {EXACT_MAX_NX}"
        )));
    }
    Ok(())
}

fn modes_to_slice(grid: &Grid, it: usize, coeffs: &[Complex64]) -> SliceFunction {
    let mut data = coeffs.to_vec();
    let dims = slice_dims(grid, grid.m());
    fft::transform_dims(&dims, &[0], &mut data, false);
    let scale = grid.nx() as f64;
    data.iter_mut().for_each(|z| *z *= scale);
    SliceFunction { slice: it, data }
}

/// Exact minimum of the Gårding ratio over all non-constant grid functions
/// (n = 1, `N_x <= 64`), by a Hermitian eigenproblem per distinct slice.
pub fn verify_garding_exact(a: &CoefficientField, kappa: f64) -> Result<GardingReport> {
    check_exact(a)?;
    let g = a.grid();
    let nx = g.nx();
    let m = g.m();
    let l = g.period_x();
    let keep: Vec<usize> = (0..nx * m).filter(|&r| r / m != 0).collect();
    let mut best: Option<(f64, SliceFunction)> = None;
    for it in a.distinct_slices() {
        let qm = mode_form_matrix(a, it);
        let size = keep.len();
        let s = DMatrix::from_fn(size, size, |r, c| {
            let (kr, kc) = (keep[r] / m, keep[c] / m);
            let wr = g.space_frequency(kr).abs() * l.sqrt();
            let wc = g.space_frequency(kc).abs() * l.sqrt();
            let mut v = qm[(keep[r], keep[c])];
            if r == c {
                v += kappa * l;
            }
            v / (wr * wc)
        });
        let s = (&s + s.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(s);
        let (imin, &lmin) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .expect("nonempty basis");
        if best.as_ref().is_none_or(|b| lmin < b.0) {
            let mut coeffs = vec![ZERO; nx * m];
            for (r, &kr) in keep.iter().enumerate() {
                let w = g.space_frequency(kr / m).abs() * l.sqrt();
                coeffs[kr] = eig.eigenvectors[(r, imin)] / w;
            }
            best = Some((lmin, modes_to_slice(g, it, &coeffs)));
        }
    }
    let (lambda_est, witness) = best.expect("at least one slice");
    Ok(GardingReport { lambda_est, kappa, trials: 0, exact: true, witness })
}

/// Smallest `K` with `Re int A grad u . conj grad u >= target int |grad u|^2 - K int |u|^2`
/// on every grid function (n = 1, `N_x <= 64`).
pub fn kappa_needed_exact(a: &CoefficientField, target: f64) -> Result<f64> {
    check_exact(a)?;
    let g = a.grid();
    let nx = g.nx();
    let m = g.m();
    let l = g.period_x();
    let mut worst = f64::NEG_INFINITY;
    for it in a.distinct_slices() {
        let qm = mode_form_matrix(a, it);
        let size = nx * m;
        let s = DMatrix::from_fn(size, size, |r, c| {
            let mut v = -qm[(r, c)];
            if r == c {
                v += target * l * g.space_frequency(r / m).powi(2);
            }
            v / l
        });
        let s = (&s + s.adjoint()) * Complex64::new(0.5, 0.0);
        let top =
            SymmetricEigen::new(s).eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(top);
    }
    Ok(worst.max(0.0))
}

/// Sampled lower estimate of [`kappa_needed_exact`] for any dimension.
pub fn kappa_needed_sampled(a: &CoefficientField, target: f64, trials: usize, seed: u64) -> f64 {
    let slices = a.distinct_slices();
    (0..trials.max(1))
        .into_par_iter()
        .map(|trial| {
            let mut r = rng::substream(seed, "garding-kappa", trial as u64);
            let it = slices[r.random_range(0..slices.len())];
            let u = random_slice_function(a.grid(), trial, &mut r);
            let (form, gg, uu) = slice_form(a, it, &u);
            (target * gg - form) / uu
        })
        .reduce(|| 0.0, f64::max)
}

/// Sup-norm distance from `q` to the complement of `q0` along each axis, on the torus.
fn inner_distance(q0: &Cube, q: &Cube, period: f64) -> f64 {
    q0.center()
        .iter()
        .zip(q.center())
        .map(|(&c0, &c)| {
            let off = ((c - c0 + 0.5 * period).rem_euclid(period) - 0.5 * period).abs();
            q0.half() - off - q.half()
        })
        .fold(f64::INFINITY, f64::min)
}

/// `1_{Q_0} A + sigma 1_{outside Q}` with time-independent spatial cubes.
///
/// `A` is only read on `Q_0`. The result carries `lambda / 4` and `kappa = 0`
/// as declared constants; [`appendix_sweep`] fills in the measured `K`.
pub fn extend_coefficients(
    a: &CoefficientField,
    q0: &Cube,
    q: &Cube,
    sigma: f64,
) -> Result<CoefficientField> {
    let g = a.grid();
    if q0.n() != g.n() || q.n() != g.n() {
        return Err(Error::ShapeMismatch("cube dimension".into()));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma={sigma}")));
    }
    let dist = inner_distance(q0, q, g.period_x());
    if dist < g.dx() {
        return Err(Error::InvalidParameter(format!(
            "Q must lie in Q_0 at positive grid distance (distance {dist:.3e}, dx {:.3e})",
            g.dx()
        )));
    }
    let sp = g.spatial_points();
    let fp = |c: &Cube| -> Result<Vec<bool>> {
        let reg = crate::grid::Region::new(crate::grid::TimeInterval::new(0.0, g.period_t())?, *c);
        let mut mask = vec![false; sp];
        for j in reg.footprint(g)?.spatial {
            mask[j] = true;
        }
        Ok(mask)
    };
    let in_q0 = fp(q0)?;
    let in_q = fp(q)?;
    let d = a.dim();
    let count = a.table_len();
    let mut table = a.table.clone();
    for k in 0..count {
        let mut e = a.table_entry(k).to_vec();
        for i in 0..d {
            e[i * d + i] += sigma;
        }
        table.extend(e);
    }
    table.extend(identity(d, sigma));
    let outside = (2 * count) as u32;
    let index = (0..g.points())
        .map(|p| {
            let j = p % sp;
            let k = a.index[p];
            if !in_q0[j] {
                outside
            } else if in_q[j] {
                k
            } else {
                k + count as u32
            }
        })
        .collect();
    CoefficientField::from_table(*g, table, index, a.lambda() / 4.0, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub kappa_needed: f64,
    pub lambda_est: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub sigma_start: f64,
    pub sigma_factor: f64,
    pub steps: usize,
    /// Largest admissible `K`; `None` uses `16 (|A| + 1) / dist(Q, outside Q_0)^2`.
    pub kappa_cap: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Use the exact eigenproblem (n = 1, `N_x <= 64`).
    pub exact: bool,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            sigma_start: 1.0 / 64.0,
            sigma_factor: 2.0,
            steps: 16,
            kappa_cap: None,
            trials: 200,
            seed: 0,
            exact: true,
        }
    }
}

/// Raises `sigma` geometrically until the extension satisfies Gårding with
/// constant `lambda / 4` and a `K` within the cap. Returns every rung tried;
/// the last row passes unless the ladder was exhausted.
pub fn appendix_sweep(
    a: &CoefficientField,
    q0: &Cube,
    q: &Cube,
    params: &SweepParams,
) -> Result<Vec<SweepRow>> {
    let g = a.grid();
    let dist = inner_distance(q0, q, g.period_x());
    let cap = params.kappa_cap.unwrap_or(16.0 * (a.sup_norm() + 1.0) / (dist * dist));
    let target = a.lambda() / 4.0;
    let mut rows = Vec::new();
    let mut sigma = params.sigma_start;
    for _ in 0..params.steps.max(1) {
        let ext = extend_coefficients(a, q0, q, sigma)?;
        let kappa_needed = if params.exact {
            kappa_needed_exact(&ext, target)?
        } else {
            kappa_needed_sampled(&ext, target, params.trials, params.seed)
        };
        let lambda_est = if params.exact {
            verify_garding_exact(&ext, kappa_needed)?.lambda_est
        } else {
            verify_garding_with(&ext, kappa_needed, params.trials, params.seed ^ 0x5eed).lambda_est
        };
        let pass = kappa_needed <= cap && lambda_est >= target - 1e-6;
        rows.push(SweepRow { sigma, kappa_needed, lambda_est, pass });
        if pass {
            break;
        }
        sigma *= params.sigma_factor;
    }
    Ok(rows)
}
