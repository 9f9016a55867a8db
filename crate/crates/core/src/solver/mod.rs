//! The global operator `L = d_t - div A grad + (kappa + 1)` on the energy space,
//! its hidden-coercivity form, a preconditioned Krylov inverse and the
//! localization of weak solutions by a cut-off.
//!
//! Unknowns live in Fourier space. The iteration runs on
//! `W^{-1} (1 - delta H) L P^{-1} W` where `P` is the constant-coefficient
//! symbol `i tau + lambda |xi|^2 + kappa + 1` and `W` multiplies by the energy
//! weight `(1 + |xi|^2 + |tau|)^{1/2}`, so Euclidean residuals in the iteration
//! are dual-norm residuals of the original equation.

pub mod gmres;
mod localize;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::fft::{self, Axes};
use crate::fracops::{self, frequencies, ParabolicParts};
use crate::grid::{lp_norm, Field, Grid, Shape};
use crate::rng;
use crate::sample::BandLimited;

pub use localize::{localize, relative_defect, Localized};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A field together with its spatial gradient, half time derivative and
/// Hilbert-transformed half derivative.
#[derive(Debug, Clone)]
pub struct EnergyVector {
    v: Field,
    parts: ParabolicParts,
}

impl EnergyVector {
    pub fn new(v: Field) -> Result<Self> {
        let parts = ParabolicParts::of(&v)?;
        Ok(Self { v, parts })
    }

    pub fn field(&self) -> &Field {
        &self.v
    }

    pub fn into_field(self) -> Field {
        self.v
    }

    pub fn grid(&self) -> &Grid {
        self.v.grid()
    }

    pub fn grad(&self) -> &Field {
        &self.parts.grad
    }

    pub fn half(&self) -> &Field {
        &self.parts.half
    }

    pub fn hilbert_half(&self) -> &Field {
        &self.parts.hilbert_half
    }

    pub fn parts(&self) -> &ParabolicParts {
        &self.parts
    }

    /// `(||v||^2 + ||grad v||^2 + ||D^{1/2} v||^2)^{1/2}`.
    pub fn norm_e(&self) -> f64 {
        (self.v.norm_l2().powi(2) + self.grad().norm_l2().powi(2) + self.half().norm_l2().powi(2))
            .sqrt()
    }

    /// `(||v||^2 + ||grad v||^2)^{1/2}`.
    pub fn norm_v(&self) -> f64 {
        (self.v.norm_l2().powi(2) + self.grad().norm_l2().powi(2)).sqrt()
    }

    /// `(||v||_p^p + ||grad v||_p^p + ||D^{1/2} v||_p^p)^{1/p}`.
    pub fn norm_e_p(&self, p: f64) -> Result<f64> {
        let s = lp_norm(&self.v, p)?.powf(p)
            + lp_norm(self.grad(), p)?.powf(p)
            + lp_norm(self.half(), p)?.powf(p);
        Ok(s.powf(1.0 / p))
    }

    /// `|Dv| = |grad v| + |H D^{1/2} v| + |D^{1/2} v| + |v|`.
    pub fn differential(&self) -> Field {
        self.parts.differential(&self.v)
    }
}

/// Data `(f, F)` of `d_t u - div A grad u = f + div F`.
#[derive(Debug, Clone)]
pub struct RightHandSide {
    pub f: Field,
    pub ff: Field,
}

impl RightHandSide {
    pub fn new(f: Field, ff: Field) -> Result<Self> {
        f.grid().ensure_same(ff.grid())?;
        if f.shape() != Shape::Scalar || ff.shape() != Shape::Vector {
            return Err(Error::ShapeMismatch("right-hand side needs scalar f and vector F".into()));
        }
        Ok(Self { f, ff })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { f: Field::zeros(grid, Shape::Scalar), ff: Field::zeros(grid, Shape::Vector) }
    }

    pub fn grid(&self) -> &Grid {
        self.f.grid()
    }

    /// The distribution `f + div F` as a field.
    pub fn source(&self) -> Field {
        let div = fracops::divergence_x(&self.ff).expect("vector shape checked");
        self.f.add(&div).expect("same grid")
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { f: self.f.scale_real(c), ff: self.ff.scale_real(c) }
    }
}

/// Energy weight `(1 + |xi|^2 + |tau|)^{1/2}`.
fn energy_weight(tau: f64, xi: &[f64]) -> f64 {
    (1.0 + xi.iter().map(|x| x * x).sum::<f64>() + tau.abs()).sqrt()
}

/// Dual energy norm `sup |<b, phi>| / ||phi||_E` of a scalar field.
pub fn dual_norm(b: &Field) -> f64 {
    let g = *b.grid();
    let mut hat = b.data().to_vec();
    fft::transform(&g, b.comps(), &mut hat, Axes::All, true);
    let dv = g.cell_volume();
    let s: f64 = hat
        .chunks(b.comps())
        .enumerate()
        .map(|(p, c)| {
            let (tau, xi) = frequencies(&g, p);
            let w = energy_weight(tau, &xi[..g.n()]);
            c.iter().map(|z| z.norm_sqr()).sum::<f64>() / (w * w)
        })
        .sum();
    (s * dv * dv / g.volume()).sqrt()
}

/// `max_k |<r, e_k>| / ||e_k||_E` over single Fourier modes `e_k`.
pub fn max_mode_dual(r: &Field) -> f64 {
    let g = *r.grid();
    let mut hat = r.data().to_vec();
    fft::transform(&g, r.comps(), &mut hat, Axes::All, true);
    let dv = g.cell_volume();
    let sv = g.volume().sqrt();
    hat.chunks(r.comps())
        .enumerate()
        .map(|(p, c)| {
            let (tau, xi) = frequencies(&g, p);
            let w = energy_weight(tau, &xi[..g.n()]);
            c.iter().map(|z| z.norm()).fold(0.0, f64::max) * dv / (sv * w)
        })
        .fold(0.0, f64::max)
}

/// `<L u, phi> = <A grad u, grad phi> + <H D^{1/2} u, D^{1/2} phi> + (kappa + 1) <u, phi>`.
pub fn apply_l(
    a: &CoefficientField,
    kappa: f64,
    u: &EnergyVector,
    phi: &EnergyVector,
) -> Result<Complex64> {
    a.grid().ensure_same(u.grid())?;
    u.grid().ensure_same(phi.grid())?;
    let agu = a.apply(u.grad())?;
    Ok(agu.inner(phi.grad())?
        + u.hilbert_half().inner(phi.half())?
        + u.field().inner(phi.field())? * (kappa + 1.0))
}

/// `Re a_delta(v, v) - [(lambda - |A| delta) ||grad v||^2 + delta ||D^{1/2} v||^2 + ||v||^2]`
/// with `a_delta(u, v) = <L u, (1 + delta H) v>`, using the declared `lambda` and `kappa` of `a`.
pub fn coercivity_margin(a: &CoefficientField, delta: f64, v: &EnergyVector) -> Result<f64> {
    let limit = a.lambda() / a.sup_norm();
    if !(delta > 0.0 && delta < limit) {
        return Err(Error::DeltaOutOfRange { delta, limit });
    }
    let hv = fracops::hilbert_t(v.field());
    let w = EnergyVector::new(v.field().add(&hv.scale_real(delta))?)?;
    let form = apply_l(a, a.kappa(), v, &w)?.re;
    let bound = (a.lambda() - a.sup_norm() * delta) * v.grad().norm_l2().powi(2)
        + delta * v.half().norm_l2().powi(2)
        + v.field().norm_l2().powi(2);
    Ok(form - bound)
}

/// Coercivity constant `min(lambda - |A| delta, delta, 1)` of `a_delta` on `E`.
pub fn coercivity_constant(a: &CoefficientField, delta: f64) -> f64 {
    (a.lambda() - a.sup_norm() * delta).min(delta).min(1.0)
}

pub fn default_delta(a: &CoefficientField) -> f64 {
    a.lambda() / (2.0 * a.sup_norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    /// Rotation parameter; `None` uses `lambda / (2 |A|)`.
    pub delta: Option<f64>,
    pub restart: usize,
    /// Iteration cap; `None` uses `10 sqrt(dofs)`.
    pub max_iter: Option<usize>,
    /// The Krylov iteration stops at `inner_factor * tol` relative dual residual.
    pub inner_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, delta: None, restart: 60, max_iter: None, inner_factor: 1e-2 }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub restarts: usize,
    pub history: Vec<f64>,
    pub tol: f64,
    pub delta: f64,
    pub kappa: f64,
    /// `max_k |<L v - b, e_k>| / (||e_k||_E ||b||_{E*})` over Fourier modes.
    pub dual_residual: f64,
    pub rhs_dual_norm: f64,
    pub energy_norm: f64,
    /// `||v||_E / ||b||_{E*}`.
    pub inverse_ratio: f64,
    /// `(1 + delta^2)^{1/2} / c_delta`, the bound for `inverse_ratio`.
    pub inverse_bound: f64,
}

struct Symbols {
    tau: Vec<f64>,
    xi: Vec<[f64; 2]>,
}

impl Symbols {
    fn new(g: &Grid) -> Self {
        let (tau, xi) = (0..g.points()).map(|p| frequencies(g, p)).unzip();
        Self { tau, xi }
    }

    fn weight(&self, p: usize, n: usize) -> f64 {
        energy_weight(self.tau[p], &self.xi[p][..n])
    }
}

/// Spectral application of `L` to Fourier coefficients `vhat`.
fn apply_l_hat(
    a: &CoefficientField,
    kappa: f64,
    sym: &Symbols,
    vhat: &[Complex64],
) -> Vec<Complex64> {
    let g = *a.grid();
    let m = g.m();
    let n = g.n();
    let d = m * n;
    let mut grad = vec![ZERO; g.points() * d];
    grad.par_chunks_mut(d).enumerate().for_each(|(p, c)| {
        for al in 0..m {
            for i in 0..n {
                c[al * n + i] = I * sym.xi[p][i] * vhat[p * m + al];
            }
        }
    });
    fft::transform(&g, d, &mut grad, Axes::All, false);
    let mut flux = a.apply_data(&grad);
    fft::transform(&g, d, &mut flux, Axes::All, true);
    let mut out = vec![ZERO; vhat.len()];
    out.par_chunks_mut(m).enumerate().for_each(|(p, c)| {
        let diag = Complex64::new(kappa + 1.0, sym.tau[p]);
        for al in 0..m {
            let div: Complex64 = (0..n).map(|i| I * sym.xi[p][i] * flux[p * d + al * n + i]).sum();
            c[al] = diag * vhat[p * m + al] - div;
        }
    });
    out
}

/// Strong residual `L v - (f + div F)` as a field.
pub fn strong_residual(
    a: &CoefficientField,
    kappa: f64,
    v: &Field,
    rhs: &RightHandSide,
) -> Result<Field> {
    a.grid().ensure_same(v.grid())?;
    v.grid().ensure_same(rhs.grid())?;
    let g = *v.grid();
    let sym = Symbols::new(&g);
    let mut vhat = v.data().to_vec();
    fft::transform(&g, g.m(), &mut vhat, Axes::All, true);
    let mut lv = apply_l_hat(a, kappa, &sym, &vhat);
    fft::transform(&g, g.m(), &mut lv, Axes::All, false);
    let lv = Field::from_parts_unchecked(g, Shape::Scalar, lv);
    lv.sub(&rhs.source())
}

/// Solves `L v = f + div F` on the torus.
pub fn solve(
    a: &CoefficientField,
    kappa: f64,
    rhs: &RightHandSide,
    opts: &SolverOptions,
) -> Result<(EnergyVector, SolveReport)> {
    a.grid().ensure_same(rhs.grid())?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("solver tolerance must be positive".into()));
    }
    if !(a.lambda() > 0.0 && kappa >= 0.0) {
        return Err(Error::InvalidParameter("solver needs lambda > 0 and kappa >= 0".into()));
    }
    let delta = opts.delta.unwrap_or_else(|| default_delta(a));
    let limit = a.lambda() / a.sup_norm();
    if !(delta > 0.0 && delta < limit) {
        return Err(Error::DeltaOutOfRange { delta, limit });
    }
    let g = *a.grid();
    let m = g.m();
    let n = g.n();
    let sym = Symbols::new(&g);
    let lam = a.lambda();
    let weight: Vec<f64> = (0..g.points()).map(|p| sym.weight(p, n)).collect();
    let precond: Vec<Complex64> = (0..g.points())
        .map(|p| {
            let xi2: f64 = sym.xi[p][..n].iter().map(|x| x * x).sum();
            Complex64::new(lam * xi2 + kappa + 1.0, sym.tau[p]).inv()
        })
        .collect();
    let rot: Vec<Complex64> = (0..g.points())
        .map(|p| {
            Complex64::new(1.0, -delta * sym.tau[p].signum() * (sym.tau[p] != 0.0) as u8 as f64)
        })
        .collect();
    let source = rhs.source();
    let mut bhat = source.data().to_vec();
    fft::transform(&g, m, &mut bhat, Axes::All, true);
    let b: Vec<Complex64> =
        bhat.iter().enumerate().map(|(i, z)| rot[i / m] * z / weight[i / m]).collect();
    let to_vhat = |z: &[Complex64]| -> Vec<Complex64> {
        z.iter().enumerate().map(|(i, x)| precond[i / m] * weight[i / m] * x).collect()
    };
    let mut apply = |z: &[Complex64]| -> Vec<Complex64> {
        let lv = apply_l_hat(a, kappa, &sym, &to_vhat(z));
        lv.iter().enumerate().map(|(i, x)| rot[i / m] * x / weight[i / m]).collect()
    };
    let dofs = g.points() * m;
    let max_iter = opts.max_iter.unwrap_or((10.0 * (dofs as f64).sqrt()).ceil() as usize);
    let rtol = opts.tol * opts.inner_factor;
    let out = gmres::gmres(&mut apply, &b, rtol, opts.restart, max_iter);
    if !out.converged {
        let last = out.history.last().copied().unwrap_or(f64::NAN);
        return Err(Error::NoConvergence {
            iterations: out.iterations,
            last,
            history: out.history,
        });
    }
    let mut vhat = to_vhat(&out.x);
    fft::transform(&g, m, &mut vhat, Axes::All, false);
    let v = Field::from_vec(g, Shape::Scalar, vhat)?;
    let rhs_norm = dual_norm(&source);
    let resid = strong_residual(a, kappa, &v, rhs)?;
    let dual_residual = if rhs_norm > 0.0 { max_mode_dual(&resid) / rhs_norm } else { 0.0 };
    if dual_residual > opts.tol {
        return Err(Error::NoConvergence {
            iterations: out.iterations,
            last: dual_residual,
            history: out.history,
        });
    }
    let ev = EnergyVector::new(v)?;
    let energy_norm = ev.norm_e();
    let report = SolveReport {
        iterations: out.iterations,
        restarts: out.restarts,
        history: out.history,
        tol: opts.tol,
        delta,
        kappa,
        dual_residual,
        rhs_dual_norm: rhs_norm,
        energy_norm,
        inverse_ratio: if rhs_norm > 0.0 { energy_norm / rhs_norm } else { 0.0 },
        inverse_bound: (1.0 + delta * delta).sqrt() / coercivity_constant(a, delta),
    };
    Ok((ev, report))
}

/// `<A grad u, grad phi> - <u, d_t phi> + c <u, phi> - <f, phi> + <F, grad phi>`.
#[allow(clippy::too_many_arguments)]
pub fn weak_residual_zero_order(
    u: &Field,
    a: &CoefficientField,
    c: f64,
    f: &Field,
    ff: &Field,
    phi: &Field,
) -> Result<Complex64> {
    let gphi = fracops::gradient_x(phi)?;
    let agu = a.apply(&fracops::gradient_x(u)?)?;
    let dphi = fracops::time_derivative(phi);
    Ok(agu.inner(&gphi)? - u.inner(&dphi)? + u.inner(phi)? * c - f.inner(phi)? + ff.inner(&gphi)?)
}

/// `<A grad u, grad phi> - <u, d_t phi> - <f, phi> + <F, grad phi>`.
pub fn weak_residual(
    u: &Field,
    a: &CoefficientField,
    f: &Field,
    ff: &Field,
    phi: &Field,
) -> Result<Complex64> {
    weak_residual_zero_order(u, a, 0.0, f, ff, phi)
}

/// Largest normalized weak residual over random band-limited test functions.
///
/// Each residual is divided by `S ||phi||_T` with
/// `S = ||A grad u|| + (1 + |c|) ||u|| + ||f|| + ||F||` and
/// `||phi||_T = ||phi|| + ||grad phi|| + ||d_t phi||`, which bounds it by
/// Cauchy-Schwarz, so the value is a relative residual.
#[allow(clippy::too_many_arguments)]
pub fn residual_probe(
    u: &Field,
    a: &CoefficientField,
    c: f64,
    f: &Field,
    ff: &Field,
    probes: usize,
    band: &BandLimited,
    seed: u64,
) -> Result<f64> {
    let agu = a.apply(&fracops::gradient_x(u)?)?;
    let scale = agu.norm_l2() + (1.0 + c.abs()) * u.norm_l2() + f.norm_l2() + ff.norm_l2();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for k in 0..probes {
        let mut r = rng::substream(seed, "residual-probe", k as u64);
        let phi = band.sample(u.grid(), Shape::Scalar, &mut r)?;
        let tn = phi.norm_l2()
            + fracops::gradient_x(&phi)?.norm_l2()
            + fracops::time_derivative(&phi).norm_l2();
        let res = weak_residual_zero_order(u, a, c, f, ff, &phi)?;
        worst = worst.max(res.norm() / (scale * tn));
    }
    Ok(worst)
}

/// `|Re <d_t v, v>| / (||d_t v|| ||v||)`, zero for the zero field.
pub fn energy_identity_defect(v: &Field) -> Result<f64> {
    let dv = fracops::time_derivative(v);
    let den = dv.norm_l2() * v.norm_l2();
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(dv.inner(v)?.re.abs() / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientKind, CoefficientParams};
    use crate::rng::stream;
    use crate::sample::MeanMode;

    fn constant(g: Grid) -> CoefficientField {
        CoefficientField::generate(g, CoefficientKind::Constant, &CoefficientParams::default(), 0)
            .unwrap()
    }

    fn checkerboard(g: Grid) -> CoefficientField {
        let p = CoefficientParams { cell_t: 1.0 / 8.0, cell_x: Some(0.25), ..Default::default() };
        CoefficientField::generate(g, CoefficientKind::TimeCheckerboard, &p, 0).unwrap()
    }

    #[test]
    fn single_mode_is_diagonal() {
        let g = Grid::new(1, 1, 32, 32, 1.0, 1.0).unwrap();
        let (kt, kx) = (3.0, -2.0);
        let tau = 2.0 * std::f64::consts::PI * kt;
        let xi = 2.0 * std::f64::consts::PI * kx;
        let mode = |t: f64, x: &[f64]| Complex64::from_polar(1.0, tau * t + xi * x[0]);
        let f = Field::from_fn(g, Shape::Scalar, |t, x, _| mode(t, x));
        let rhs = RightHandSide::new(f, Field::zeros(g, Shape::Vector)).unwrap();
        let (v, rep) = solve(&constant(g), 0.0, &rhs, &SolverOptions::with_tol(1e-10)).unwrap();
        let denom = Complex64::new(xi * xi + 1.0, tau);
        let want = Field::from_fn(g, Shape::Scalar, |t, x, _| mode(t, x) / denom);
        assert!(v.field().sub(&want).unwrap().max_abs() <= 1e-10 * want.max_abs());
        assert!(rep.dual_residual <= 1e-10);
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = Grid::new(1, 2, 16, 16, 1.0, 1.0).unwrap();
        let (v, rep) =
            solve(&checkerboard(g), 0.0, &RightHandSide::zeros(g), &SolverOptions::default())
                .unwrap();
        assert_eq!(v.field().max_abs(), 0.0);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn manufactured_checkerboard() {
        let g = Grid::new(1, 1, 64, 64, 1.0, 1.0).unwrap();
        let a = checkerboard(g);
        let vstar = BandLimited::new(4, 4).sample(&g, Shape::Scalar, &mut stream(1, "v")).unwrap();
        let flux = a.apply(&fracops::gradient_x(&vstar).unwrap()).unwrap();
        let f = fracops::time_derivative(&vstar)
            .sub(&fracops::divergence_x(&flux).unwrap())
            .unwrap()
            .add(&vstar)
            .unwrap();
        let rhs = RightHandSide::new(f, Field::zeros(g, Shape::Vector)).unwrap();
        let tol = 1e-8;
        let (v, rep) = solve(&a, 0.0, &rhs, &SolverOptions::with_tol(tol)).unwrap();
        let err = EnergyVector::new(v.field().sub(&vstar).unwrap()).unwrap().norm_e();
        let norm = EnergyVector::new(vstar).unwrap().norm_e();
        assert!(err <= 10.0 * tol * norm, "{err:e} vs {norm:e}, {rep:?}");
        assert!(rep.inverse_ratio <= rep.inverse_bound);
    }

    #[test]
    fn cap_reports_history() {
        let g = Grid::new(1, 1, 32, 32, 1.0, 1.0).unwrap();
        let a = checkerboard(g);
        let f = BandLimited::new(4, 4).sample(&g, Shape::Scalar, &mut stream(2, "f")).unwrap();
        let rhs = RightHandSide::new(f, Field::zeros(g, Shape::Vector)).unwrap();
        let opts = SolverOptions { max_iter: Some(2), ..SolverOptions::with_tol(1e-12) };
        match solve(&a, 0.0, &rhs, &opts) {
            Err(Error::NoConvergence { history, .. }) => assert!(!history.is_empty()),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn apply_l_identity_cross_term() {
        let g = Grid::new(1, 1, 32, 32, 1.0, 1.0).unwrap();
        let v =
            BandLimited::new(5, 5).real().sample(&g, Shape::Scalar, &mut stream(3, "v")).unwrap();
        let ev = EnergyVector::new(v).unwrap();
        let cross = ev.hilbert_half().inner(ev.half()).unwrap();
        assert!(cross.re.abs() <= 1e-12 * ev.half().norm_l2().powi(2));
        let val = apply_l(&constant(g), 0.0, &ev, &ev).unwrap();
        let want = ev.grad().norm_l2().powi(2) + ev.field().norm_l2().powi(2);
        assert!((val.re - want).abs() <= 1e-10 * want);
        let zero = EnergyVector::new(Field::zeros(g, Shape::Scalar)).unwrap();
        assert_eq!(apply_l(&constant(g), 0.0, &ev, &zero).unwrap(), ZERO);
    }

    #[test]
    fn margin_range_and_zero() {
        let g = Grid::new(1, 1, 16, 16, 1.0, 1.0).unwrap();
        let a = checkerboard(g);
        let zero = EnergyVector::new(Field::zeros(g, Shape::Scalar)).unwrap();
        assert_eq!(coercivity_margin(&a, 0.1, &zero).unwrap(), 0.0);
        assert!(matches!(coercivity_margin(&a, 0.3, &zero), Err(Error::DeltaOutOfRange { .. })));
    }

    #[test]
    fn weak_residual_of_exact_and_wrong_fields() {
        let g = Grid::new(1, 1, 32, 32, 1.0, 1.0).unwrap();
        let a = constant(g);
        let tau = 2.0 * std::f64::consts::PI * 2.0;
        let xi = 2.0 * std::f64::consts::PI;
        let u = Field::from_fn(g, Shape::Scalar, |t, x, _| {
            Complex64::from_polar(1.0, tau * t + xi * x[0])
        });
        let f = u.scale(Complex64::new(xi * xi, tau));
        let zero = Field::zeros(g, Shape::Vector);
        let band = BandLimited::new(4, 4).mean(MeanMode::Keep);
        assert!(residual_probe(&u, &a, 0.0, &f, &zero, 10, &band, 1).unwrap() < 1e-13);
        let wrong = Field::zeros(g, Shape::Scalar);
        let band = BandLimited::new(3, 3);
        assert!(residual_probe(&u, &a, 0.0, &wrong, &zero, 10, &band, 1).unwrap() > 1e-3);
    }

    fn spectrum(v: &Field) -> Vec<Complex64> {
        let mut h = v.data().to_vec();
        fft::transform(v.grid(), v.comps(), &mut h, Axes::All, true);
        h
    }

    #[test]
    fn apply_l_matches_mode_sum() {
        let g = Grid::new(2, 1, 8, 8, 1.0, 2.0).unwrap();
        let mat = vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(0.3, 0.4),
            Complex64::new(-0.1, 0.2),
            Complex64::new(1.5, 0.0),
        ];
        let kappa = 0.3;
        let a = CoefficientField::from_fn(g, 1.0, kappa, |_, _| mat.clone()).unwrap();
        let mut r = stream(11, "l");
        let band = BandLimited::new(3, 3);
        let u = band.sample(&g, Shape::Scalar, &mut r).unwrap();
        let phi = band.sample(&g, Shape::Scalar, &mut r).unwrap();
        let got = apply_l(
            &a,
            kappa,
            &EnergyVector::new(u.clone()).unwrap(),
            &EnergyVector::new(phi.clone()).unwrap(),
        )
        .unwrap();
        let (uh, ph) = (spectrum(&u), spectrum(&phi));
        let mut want = ZERO;
        for p in 0..g.points() {
            let (tau, xi) = frequencies(&g, p);
            let mut grad = ZERO;
            for i in 0..2 {
                for j in 0..2 {
                    grad += mat[i * 2 + j] * xi[j] * xi[i];
                }
            }
            want += (grad + I * tau + kappa + 1.0) * uh[p] * ph[p].conj();
        }
        want *= g.cell_volume() / g.points() as f64;
        assert!((got - want).norm() <= 1e-12 * want.norm(), "{got} vs {want}");
    }

    #[test]
    fn identity_margin_nonnegative() {
        let g = Grid::new(1, 1, 32, 32, 1.0, 1.0).unwrap();
        let a = constant(g);
        for k in 0..10 {
            let v = BandLimited::new(8, 8)
                .real()
                .sample(&g, Shape::Scalar, &mut rng::substream(12, "v", k))
                .unwrap();
            let m = coercivity_margin(&a, 0.5, &EnergyVector::new(v).unwrap()).unwrap();
            assert!(m >= -1e-10, "{m}");
        }
    }

    #[test]
    fn checkerboard_margin_matches_oracle() {
        let g = Grid::new(1, 1, 32, 32, 1.0, 1.0).unwrap();
        let a = checkerboard(g);
        let delta = default_delta(&a);
        let dv = g.cell_volume() / g.points() as f64;
        for k in 0..100 {
            let v = BandLimited::new(10, 10)
                .sample(&g, Shape::Scalar, &mut rng::substream(13, "v", k))
                .unwrap();
            let ev = EnergyVector::new(v.clone()).unwrap();
            let margin = coercivity_margin(&a, delta, &ev).unwrap();
            let e2 = ev.norm_e().powi(2);
            assert!(margin >= -1e-10 * e2, "{margin}");

            let vh = spectrum(&v);
            let grad = fracops::gradient_x(&v).unwrap();
            let grad_h = fracops::gradient_x(&fracops::hilbert_t(&v)).unwrap();
            let agu = a.apply(&grad).unwrap();
            let mut form = 0.0;
            for p in 0..g.points() {
                let c = agu.data()[p];
                form +=
                    (c * (grad.data()[p] + grad_h.data()[p] * delta).conj()).re * g.cell_volume();
            }
            let (mut half2, mut l2, mut g2) = (0.0, 0.0, 0.0);
            for (p, z) in vh.iter().enumerate() {
                let (tau, xi) = frequencies(&g, p);
                half2 += tau.abs() * z.norm_sqr() * dv;
                l2 += z.norm_sqr() * dv;
                g2 += xi[0] * xi[0] * z.norm_sqr() * dv;
            }
            form += delta * half2 + l2;
            let want = form - ((a.lambda() - a.sup_norm() * delta) * g2 + delta * half2 + l2);
            assert!((margin - want).abs() <= 1e-10 * e2, "{margin} vs {want}");
        }
    }

    #[test]
    fn energy_identity_holds() {
        let g = Grid::new(1, 2, 16, 16, 1.0, 1.0).unwrap();
        let v = BandLimited::new(6, 6).sample(&g, Shape::Scalar, &mut stream(14, "v")).unwrap();
        assert!(energy_identity_defect(&v).unwrap() <= 1e-12);
    }
}
