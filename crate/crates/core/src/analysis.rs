//! Local estimates for weak solutions measured on families of cylinders:
//! Caccioppoli, reverse Hölder for `u`, the improved Caccioppoli inequality,
//! energy continuity, the parabolic Sobolev embedding and the fractional
//! Poincaré inequality.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{self, two_lower, two_upper};
use crate::fft::{self, Axes};
use crate::fracops::{self, frequencies};
use crate::gehring::{translate_sum, TimeProfile};
use crate::grid::{
    dilate, lp_norm, Field, ParabolicCylinder, Region, Shape, TimeInterval, TimeSeries,
};
use crate::solver::EnergyVector;

/// One cylinder of a family: the two sides of an inequality and their ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub center_t: f64,
    pub center_x: Vec<f64>,
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// The right-hand side vanished; the row does not enter [`EstimateReport::max_ratio`].
    pub zero_rhs: bool,
}

impl EstimateRow {
    pub fn new(b: &ParabolicCylinder, lhs: f64, rhs: f64) -> Self {
        let zero_rhs = !(rhs > 0.0);
        let ratio = if !zero_rhs {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        Self {
            center_t: b.center_t(),
            center_x: b.center_x().to_vec(),
            r: b.radius(),
            lhs,
            rhs,
            ratio,
            zero_rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub name: String,
    pub level: Option<usize>,
    pub rows: Vec<EstimateRow>,
}

impl EstimateReport {
    pub fn new(name: &str, rows: Vec<EstimateRow>) -> Self {
        Self { name: name.to_string(), level: None, rows }
    }

    pub fn with_level(mut self, level: usize) -> Self {
        self.level = Some(level);
        self
    }

    /// Largest ratio over rows with a positive right-hand side, 0 when there are none.
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().filter(|r| !r.zero_rhs).map(|r| r.ratio).fold(0.0, f64::max)
    }

    pub fn zero_rhs_count(&self) -> usize {
        self.rows.iter().filter(|r| r.zero_rhs).count()
    }

    /// One row per cylinder: `center_t, center_x1[, center_x2], r, lhs, rhs, ratio`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let n = self.rows.first().map_or(1, |r| r.center_x.len());
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["center_t".to_string()];
        header.extend((1..=n).map(|i| format!("center_x{i}")));
        header.extend(["r", "lhs", "rhs", "ratio"].map(String::from));
        out.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![fmt(r.center_t)];
            rec.extend(r.center_x.iter().map(|&x| fmt(x)));
            rec.extend([r.r, r.lhs, r.rhs, r.ratio].map(fmt));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

/// Evaluates `check` on every cylinder in parallel, keeping the input order.
pub fn family<F>(name: &str, cylinders: &[ParabolicCylinder], check: F) -> Result<EstimateReport>
where
    F: Fn(&ParabolicCylinder) -> Result<(f64, f64)> + Sync,
{
    let rows = cylinders
        .par_iter()
        .map(|b| check(b).map(|(l, r)| EstimateRow::new(b, l, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateReport::new(name, rows))
}

/// A weak solution `u` of `d_t u - div A grad u = f + div F` with its gradient.
#[derive(Debug, Clone)]
pub struct LocalData {
    u: Field,
    grad: Field,
    f: Field,
    ff: Field,
}

impl LocalData {
    pub fn new(u: Field, f: Field, ff: Field) -> Result<Self> {
        u.grid().ensure_same(f.grid())?;
        u.grid().ensure_same(ff.grid())?;
        if u.shape() != Shape::Scalar || f.shape() != Shape::Scalar || ff.shape() != Shape::Vector {
            return Err(Error::ShapeMismatch("local data needs scalar u, f and vector F".into()));
        }
        let grad = fracops::gradient_x(&u)?;
        Ok(Self { u, grad, f, ff })
    }

    pub fn u(&self) -> &Field {
        &self.u
    }

    pub fn grad(&self) -> &Field {
        &self.grad
    }

    pub fn f(&self) -> &Field {
        &self.f
    }

    pub fn ff(&self) -> &Field {
        &self.ff
    }

    fn n(&self) -> usize {
        self.u.grid().n()
    }

    fn enlarged(&self, b: &ParabolicCylinder, gamma: f64) -> Result<Region> {
        Ok(dilate(b, gamma, self.u.grid())?.region())
    }

    /// `(avg |F|^2)^{1/2} + r (avg |f|^{2_*})^{1/2_*}` on `region`.
    fn data_terms(&self, region: &Region, r: f64, ff_weight: f64) -> Result<f64> {
        let s = exponents::to_f64(&two_lower(self.n()));
        Ok(ff_weight * region_avg(&self.ff, region, 2.0)?
            + ff_weight * r * region_avg(&self.f, region, s)?)
    }
}

fn region_avg(u: &Field, region: &Region, p: f64) -> Result<f64> {
    crate::grid::region_average(u, region, p)
}

/// `(avg_B |grad u|^2)^{1/2}` against
/// `r^{-1} (avg_{gamma B} |u|^2)^{1/2} + (avg |F|^2)^{1/2} + r (avg |f|^{2_*})^{1/2_*}`.
pub fn caccioppoli_terms(d: &LocalData, b: &ParabolicCylinder, gamma: f64) -> Result<(f64, f64)> {
    let big = d.enlarged(b, gamma)?;
    let r = b.radius();
    let lhs = region_avg(&d.grad, &b.region(), 2.0)?;
    let rhs = region_avg(&d.u, &big, 2.0)? / r + d.data_terms(&big, r, 1.0)?;
    Ok((lhs, rhs))
}

/// `(avg_B |u|^{2^*})^{1/2^*}` against
/// `avg_{gamma B} |u| + r (avg |F|^2)^{1/2} + r^2 (avg |f|^{2_*})^{1/2_*}`.
pub fn reverse_holder_u_terms(
    d: &LocalData,
    b: &ParabolicCylinder,
    gamma: f64,
) -> Result<(f64, f64)> {
    let big = d.enlarged(b, gamma)?;
    let r = b.radius();
    let p = exponents::to_f64(&two_upper(d.n()));
    let lhs = region_avg(&d.u, &b.region(), p)?;
    let rhs = region_avg(&d.u, &big, 1.0)? + d.data_terms(&big, r, r)?;
    Ok((lhs, rhs))
}

/// `(avg_B |grad u|^2)^{1/2}` against
/// `r^{-1} avg_{gamma B} |u| + (avg |F|^2)^{1/2} + r (avg |f|^{2_*})^{1/2_*}`.
pub fn improved_caccioppoli_terms(
    d: &LocalData,
    b: &ParabolicCylinder,
    gamma: f64,
) -> Result<(f64, f64)> {
    let big = d.enlarged(b, gamma)?;
    let r = b.radius();
    let lhs = region_avg(&d.grad, &b.region(), 2.0)?;
    let rhs = region_avg(&d.u, &big, 1.0)? / r + d.data_terms(&big, r, 1.0)?;
    Ok((lhs, rhs))
}

pub fn caccioppoli_check(d: &LocalData, b: &ParabolicCylinder, gamma: f64) -> Result<EstimateRow> {
    let (l, r) = caccioppoli_terms(d, b, gamma)?;
    Ok(EstimateRow::new(b, l, r))
}

pub fn reverse_holder_u_check(
    d: &LocalData,
    b: &ParabolicCylinder,
    gamma: f64,
) -> Result<EstimateRow> {
    let (l, r) = reverse_holder_u_terms(d, b, gamma)?;
    Ok(EstimateRow::new(b, l, r))
}

pub fn improved_caccioppoli_check(
    d: &LocalData,
    b: &ParabolicCylinder,
    gamma: f64,
) -> Result<EstimateRow> {
    let (l, r) = improved_caccioppoli_terms(d, b, gamma)?;
    Ok(EstimateRow::new(b, l, r))
}

/// Slice energies of `v` with the torus form of the energy continuity bound:
/// the oscillation of `t -> ||v(t)||^2` is at most `2 ||v||_V ||d_t v||_{V*}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    /// `(t, ||v(t, .)||_2^2)` for every time sample.
    pub profile: Vec<(f64, f64)>,
    pub sup: f64,
    pub oscillation: f64,
    pub v_norm: f64,
    pub dt_dual_norm: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `||(1 + |xi|^2)^{-1/2} i tau v^||_2`, the dual norm of `d_t v` on `L^2(W^{1,2})`.
pub fn time_derivative_dual_norm(v: &Field) -> f64 {
    let g = *v.grid();
    let mut hat = v.data().to_vec();
    fft::transform(&g, v.comps(), &mut hat, Axes::All, true);
    let s: f64 = hat
        .chunks(v.comps())
        .enumerate()
        .map(|(p, c)| {
            let (tau, xi) = frequencies(&g, p);
            let xi2: f64 = xi[..g.n()].iter().map(|x| x * x).sum();
            tau * tau / (1.0 + xi2) * c.iter().map(|z| z.norm_sqr()).sum::<f64>()
        })
        .sum();
    (s * g.cell_volume() / g.points() as f64).sqrt()
}

pub fn continuity_check(v: &EnergyVector, tol: f64) -> ContinuityReport {
    let g = *v.grid();
    let energy = v.field().slice_energy();
    let profile: Vec<(f64, f64)> =
        energy.iter().enumerate().map(|(i, &e)| (g.time_of(i), e)).collect();
    let sup = energy.iter().copied().fold(0.0, f64::max);
    let inf = energy.iter().copied().fold(f64::INFINITY, f64::min);
    let oscillation = sup - inf;
    let v_norm = v.norm_v();
    let dt_dual_norm = time_derivative_dual_norm(v.field());
    let bound = 2.0 * v_norm * dt_dual_norm;
    ContinuityReport {
        profile,
        sup,
        oscillation,
        v_norm,
        dt_dual_norm,
        bound,
        holds: oscillation <= bound + tol,
    }
}

/// `(||phi - mean||_{p^*}, ||grad phi||_p + ||D^{1/2} phi||_p)`.
///
/// The mean is removed because constants are not controlled by derivatives on the torus.
pub fn parabolic_sobolev_terms(phi: &Field, p: f64) -> Result<(f64, f64)> {
    let n = phi.grid().n();
    let ps = exponents::to_f64(&exponents::sobolev_upper(exponents::from_f64(p)?, n)?);
    let mean = phi.mean();
    let centered = Field::from_vec(
        *phi.grid(),
        phi.shape(),
        phi.data().iter().enumerate().map(|(i, z)| z - mean[i % mean.len()]).collect(),
    )?;
    let lhs = lp_norm(&centered, ps)?;
    let rhs =
        lp_norm(&fracops::gradient_x(phi)?, p)? + lp_norm(&fracops::half_derivative_t(phi), p)?;
    Ok((lhs, rhs))
}

pub fn parabolic_sobolev_check(phi: &Field, p: f64) -> Result<f64> {
    let (l, r) = parabolic_sobolev_terms(phi, p)?;
    Ok(if r > 0.0 { l / r } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareRow {
    pub lhs: f64,
    pub rhs: f64,
    pub rhs_hilbert: f64,
    pub ratio: f64,
    pub ratio_hilbert: f64,
}

fn nonneg_profile(h: &TimeSeries, q: f64) -> TimeProfile {
    TimeProfile::from_values(h.data().iter().map(|z| z.norm().powf(q)).collect(), h.period())
}

/// `(avg_J |h - avg_J h|^p)^{1/p}` against
/// `l(J)^{1/2} (sum_k (1 + |k|^{3/2})^{-1} avg_{J_k} |D^{1/2} h|^q)^{1/q}`,
/// together with the variant using `H D^{1/2} h`.
pub fn fractional_poincare_check(
    h: &TimeSeries,
    j: &TimeInterval,
    p: f64,
    q: f64,
) -> Result<PoincareRow> {
    if !(p >= 1.0 && q >= 1.0 && p.is_finite() && p / 2.0 < q && q <= p) {
        return Err(Error::InvalidExponent(format!("need 1 <= p/2 < q <= p, got p={p}, q={q}")));
    }
    let mean = h.interval_mean(j)?;
    let centered = TimeSeries::new(h.period(), h.data().iter().map(|z| z - mean).collect())?;
    let lhs = centered.interval_average(j, p)?;
    let half = fracops::half_derivative_series(h);
    let hh = fracops::hilbert_series(&half);
    let side = |s: &TimeSeries| -> Result<f64> {
        let prof = nonneg_profile(s, q);
        Ok(j.length().sqrt() * translate_sum(&prof, j)?.powf(1.0 / q))
    };
    let rhs = side(&half)?;
    let rhs_hilbert = side(&hh)?;
    let ratio = |l: f64, r: f64| if r > 0.0 { l / r } else { 0.0 };
    Ok(PoincareRow {
        lhs,
        rhs,
        rhs_hilbert,
        ratio: ratio(lhs, rhs),
        ratio_hilbert: ratio(lhs, rhs_hilbert),
    })
}

/// Both sides of
/// `sup_t ||v(t)||_2 + ||v||_{2^*} + ||D^{1/2} v||_2 <= C (||v||_V + ||f||_{2_*} + ||F||_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBound {
    pub sup_slice: f64,
    pub l2_upper: f64,
    pub half: f64,
    pub v_norm: f64,
    pub f_term: f64,
    pub ff_term: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

pub fn energy_bound_check(v: &EnergyVector, f: &Field, ff: &Field) -> Result<EnergyBound> {
    let n = v.grid().n();
    let sup_slice = v.field().slice_energy().into_iter().fold(0.0, f64::max).sqrt();
    let l2_upper = lp_norm(v.field(), exponents::to_f64(&two_upper(n)))?;
    let half = v.half().norm_l2();
    let v_norm = v.norm_v();
    let f_term = lp_norm(f, exponents::to_f64(&two_lower(n)))?;
    let ff_term = ff.norm_l2();
    let lhs = sup_slice + l2_upper + half;
    let rhs = v_norm + f_term + ff_term;
    Ok(EnergyBound {
        sup_slice,
        l2_upper,
        half,
        v_norm,
        f_term,
        ff_term,
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
    })
}

/// Scales `(u, f, F)` by `c`, for homogeneity checks.
pub fn scaled(d: &LocalData, c: f64) -> LocalData {
    LocalData {
        u: d.u.scale_real(c),
        grad: d.grad.scale_real(c),
        f: d.f.scale_real(c),
        ff: d.ff.scale_real(c),
    }
}

/// Shifts all of `(u, f, F)` by whole grid cells in space.
pub fn shifted(d: &LocalData, cells: &[usize]) -> Result<LocalData> {
    let shift = |u: &Field| -> Result<Field> {
        let g = *u.grid();
        let c = u.comps();
        let mut out = vec![Complex64::new(0.0, 0.0); u.data().len()];
        for p in 0..g.points() {
            let (it, ix) = g.split_index(p);
            let mut jx = [0usize; 2];
            for d in 0..g.n() {
                jx[d] = (ix[d] + cells[d]) % g.nx();
            }
            let q = g.point_index(it, &jx[..g.n()]);
            out[q * c..(q + 1) * c].copy_from_slice(u.at(p));
        }
        Field::from_vec(g, u.shape(), out)
    };
    LocalData::new(shift(&d.u)?, shift(&d.f)?, shift(&d.ff)?)
}
