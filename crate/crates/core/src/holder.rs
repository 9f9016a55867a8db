//! Higher integrability of the parabolic differential, Hölder continuity in
//! time with values in spatial `L^p`, and the gradient reverse Hölder
//! inequality obtained with weighted spatial means.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::EstimateRow;
use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::exponents::{self, from_f64, sobolev_lower, two_upper};
use crate::fracops;
use crate::grid::{
    axis_indices, dilate, lp_norm, region_average, Cube, Field, Grid, ParabolicCylinder, Shape,
    TimeInterval, TimeSeries,
};
use crate::sample::smooth_box;
use crate::solver::EnergyVector;

fn lower_f64(p: f64, n: usize) -> Result<f64> {
    Ok(exponents::to_f64(&sobolev_lower(from_f64(p)?, n)?))
}

/// `L^p` norms of the pieces of the parabolic differential of a localized solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrabilityRow {
    pub p: f64,
    pub grad_p: f64,
    pub half_p: f64,
    pub hilbert_p: f64,
    pub e_p: f64,
    /// `|| |grad v| + |D^{1/2} v| + |H D^{1/2} v| ||_p`.
    pub g_p: f64,
    /// `||F~||_p + ||f~||_{p_*}`.
    pub data: f64,
    pub ratio: f64,
}

/// One row per `p` in `(2, 2^*]`.
pub fn higher_integrability_scan(
    v: &EnergyVector,
    f: &Field,
    ff: &Field,
    p_list: &[f64],
) -> Result<Vec<IntegrabilityRow>> {
    let n = v.grid().n();
    let upper = exponents::to_f64(&two_upper(n));
    let g = v.parts().derivative_density();
    p_list
        .iter()
        .map(|&p| {
            if !(p > 2.0 && p <= upper) {
                return Err(Error::InvalidExponent(format!("p={p} outside (2, {upper}]")));
            }
            let g_p = lp_norm(&g, p)?;
            let data = lp_norm(ff, p)? + lp_norm(f, lower_f64(p, n)?)?;
            Ok(IntegrabilityRow {
                p,
                grad_p: lp_norm(v.grad(), p)?,
                half_p: lp_norm(v.half(), p)?,
                hilbert_p: lp_norm(v.hilbert_half(), p)?,
                e_p: v.norm_e_p(p)?,
                g_p,
                data,
                ratio: if data > 0.0 { g_p / data } else { 0.0 },
            })
        })
        .collect()
}

/// Time samples of `interval` in order, with unwrapped times.
fn ordered_times(interval: &TimeInterval, grid: &Grid) -> Vec<(usize, f64)> {
    let idx = axis_indices(interval.start(), interval.length(), grid.dt(), grid.nt());
    let Some(&first) = idx.first() else {
        return Vec::new();
    };
    let mut t0 = grid.time_of(first);
    while t0 < interval.start() - 0.5 * grid.dt() {
        t0 += grid.period_t();
    }
    while t0 > interval.start() + grid.dt() {
        t0 -= grid.period_t();
    }
    idx.iter().enumerate().map(|(k, &i)| (i, t0 + k as f64 * grid.dt())).collect()
}

fn spatial_indices(cube: &Cube, grid: &Grid) -> Result<Vec<usize>> {
    let whole = TimeInterval::new(0.0, grid.period_t())?;
    let fp = crate::grid::Region::new(whole, *cube).footprint(grid)?;
    if fp.spatial.is_empty() {
        return Err(Error::EmptyFootprint);
    }
    Ok(fp.spatial)
}

/// `sup_{t != s in I} (avg_Q |u(t) - u(s)|^p)^{1/p} / |t - s|^alpha` over distinct samples.
pub fn holder_quotient(
    u: &Field,
    interval: &TimeInterval,
    cube: &Cube,
    p: f64,
    alpha: f64,
) -> Result<f64> {
    let g = *u.grid();
    let times = ordered_times(interval, &g);
    if times.is_empty() {
        return Err(Error::EmptyFootprint);
    }
    let spatial = spatial_indices(cube, &g)?;
    let sp = g.spatial_points();
    let c = u.comps();
    let best = (0..times.len())
        .into_par_iter()
        .map(|a| {
            let (ia, ta) = times[a];
            let mut best = 0.0f64;
            for &(ib, tb) in &times[a + 1..] {
                let s: f64 = spatial
                    .iter()
                    .map(|&j| {
                        let (qa, qb) = ((ia * sp + j) * c, (ib * sp + j) * c);
                        let d2: f64 =
                            (0..c).map(|k| (u.data()[qa + k] - u.data()[qb + k]).norm_sqr()).sum();
                        d2.powf(0.5 * p)
                    })
                    .sum();
                let avg = (s / spatial.len() as f64).powf(1.0 / p);
                best = best.max(avg / (tb - ta).abs().powf(alpha));
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// `sup_{t in I} (avg_Q |u(t)|^p)^{1/p}`.
pub fn sup_slice_average(u: &Field, interval: &TimeInterval, cube: &Cube, p: f64) -> Result<f64> {
    let g = *u.grid();
    let times = ordered_times(interval, &g);
    if times.is_empty() {
        return Err(Error::EmptyFootprint);
    }
    let spatial = spatial_indices(cube, &g)?;
    let sp = g.spatial_points();
    Ok(times
        .iter()
        .map(|&(it, _)| {
            let s: f64 = spatial.iter().map(|&j| u.magnitude_at(it * sp + j).powf(p)).sum();
            (s / spatial.len() as f64).powf(1.0 / p)
        })
        .fold(0.0, f64::max))
}

/// Both sides of the local Hölder-in-time estimate on one cylinder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub p: f64,
    /// `1/2 - 1/p`.
    pub alpha: f64,
    pub center_t: f64,
    pub center_x: Vec<f64>,
    pub r: f64,
    /// `(avg_B |grad u|^p)^{1/p}`.
    pub grad_term: f64,
    pub sup_norm: f64,
    pub holder_quotient: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// LHS: gradient average, `sup_t` slice average and Hölder quotient on `B`.
/// RHS: `r^{-1} (avg_{gamma B} |u|^2)^{1/2} + (avg |F|^p)^{1/p} + r (avg |f|^{p_*})^{1/p_*}`.
pub fn holder_time_report(
    u: &Field,
    f: &Field,
    ff: &Field,
    b: &ParabolicCylinder,
    gamma: f64,
    p: f64,
) -> Result<HolderReport> {
    let g = *u.grid();
    let alpha = exponents::to_f64(&exponents::holder_alpha(from_f64(p)?)?);
    let big = dilate(b, gamma, &g)?.region();
    let r = b.radius();
    let grad_term = region_average(&fracops::gradient_x(u)?, &b.region(), p)?;
    let sup_norm = sup_slice_average(u, &b.interval(), &b.cube(), p)?;
    let quotient = holder_quotient(u, &b.interval(), &b.cube(), p, alpha)?;
    let lhs = grad_term + sup_norm + quotient;
    let rhs = region_average(u, &big, 2.0)? / r
        + region_average(ff, &big, p)?
        + r * region_average(f, &big, lower_f64(p, g.n())?)?;
    let row = EstimateRow::new(b, lhs, rhs);
    Ok(HolderReport {
        p,
        alpha,
        center_t: b.center_t(),
        center_x: b.center_x().to_vec(),
        r,
        grad_term,
        sup_norm,
        holder_quotient: quotient,
        lhs,
        rhs,
        ratio: row.ratio,
    })
}

fn check_weight(grid: &Grid, phi: &[f64]) -> Result<f64> {
    if phi.len() != grid.spatial_points() {
        return Err(Error::ShapeMismatch(format!(
            "weight has {} values on {} spatial points",
            phi.len(),
            grid.spatial_points()
        )));
    }
    if let Some(&m) = phi.iter().find(|&&x| x < 0.0) {
        return Err(Error::NegativeInput(m));
    }
    let total: f64 = phi.iter().sum::<f64>() * grid.spatial_cell_volume();
    if total > 0.0 {
        Ok(total)
    } else {
        Err(Error::ZeroWeight)
    }
}

/// `u~(t) = a int u(t, x) phi(x) dx` with `a = (int phi)^{-1}`, one series per component.
pub fn weighted_mean(u: &Field, phi: &[f64]) -> Result<Vec<TimeSeries>> {
    let g = *u.grid();
    let a = 1.0 / check_weight(&g, phi)?;
    let dv = g.spatial_cell_volume();
    per_slice(u, |slice, c| {
        a * dv
            * phi.iter().enumerate().map(|(j, &w)| slice[j * u.comps() + c] * w).sum::<Complex64>()
    })
}

fn per_slice(
    u: &Field,
    value: impl Fn(&[Complex64], usize) -> Complex64,
) -> Result<Vec<TimeSeries>> {
    let g = *u.grid();
    let width = g.spatial_points() * u.comps();
    (0..u.comps())
        .map(|c| {
            let data = u.data().chunks(width).map(|s| value(s, c)).collect();
            TimeSeries::new(g.period_t(), data)
        })
        .collect()
}

fn spatial_gradient(grid: &Grid, phi: &[f64]) -> Vec<f64> {
    let data: Vec<Complex64> =
        (0..grid.nt()).flat_map(|_| phi.iter().map(|&x| Complex64::new(x, 0.0))).collect();
    fracops::gradient_data(grid, 1, &data)[..grid.spatial_points() * grid.n()]
        .iter()
        .map(|z| z.re)
        .collect()
}

/// `a int [-(A grad u + F) . grad phi + f phi] dx` per slice and component.
pub fn d_dt_weighted_mean(
    u: &Field,
    a: &CoefficientField,
    f: &Field,
    ff: &Field,
    phi: &[f64],
) -> Result<Vec<TimeSeries>> {
    let g = *u.grid();
    for other in [a.grid(), f.grid(), ff.grid()] {
        g.ensure_same(other)?;
    }
    let norm = 1.0 / check_weight(&g, phi)?;
    let dv = g.spatial_cell_volume();
    let gphi = spatial_gradient(&g, phi);
    let flux = a.apply(&fracops::gradient_x(u)?)?.add(ff)?;
    let (m, n) = (g.m(), g.n());
    let sp = g.spatial_points();
    (0..m)
        .map(|al| {
            let data = (0..g.nt())
                .map(|it| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for j in 0..sp {
                        let p = it * sp + j;
                        s += f.data()[p * m + al] * phi[j];
                        for i in 0..n {
                            s -= flux.data()[(p * m + al) * n + i] * gphi[j * n + i];
                        }
                    }
                    s * norm * dv
                })
                .collect();
            TimeSeries::new(g.period_t(), data)
        })
        .collect()
}

/// Largest difference between the spectral derivative of `u~` and the flux formula,
/// relative to the largest value of either.
pub fn weighted_mean_consistency(
    u: &Field,
    a: &CoefficientField,
    f: &Field,
    ff: &Field,
    phi: &[f64],
) -> Result<f64> {
    let means = weighted_mean(u, phi)?;
    let formula = d_dt_weighted_mean(u, a, f, ff, phi)?;
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (m, fo) in means.iter().zip(&formula) {
        let d = fracops::derivative_series(m);
        for (x, y) in d.data().iter().zip(fo.data()) {
            diff = diff.max((x - y).norm());
            scale = scale.max(x.norm()).max(y.norm());
        }
    }
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// The intermediate function `w = (u - u~) eta` of the weighted-means argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedMeansReport {
    pub w_l2: f64,
    pub grad_w_l2: f64,
    /// `||w||_2 / (r ||grad w||_2)`.
    pub poincare_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradReverseHolder {
    pub row: EstimateRow,
    pub intermediate: WeightedMeansReport,
}

/// `(avg_B |grad u|^p)^{1/p}` against
/// `avg_{gamma B} |grad u| + (avg |F|^p)^{1/p} + r (avg |f|^{p_*})^{1/p_*}`.
pub fn grad_reverse_holder_report(
    u: &Field,
    f: &Field,
    ff: &Field,
    b: &ParabolicCylinder,
    gamma: f64,
    p: f64,
) -> Result<GradReverseHolder> {
    let g = *u.grid();
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidExponent(format!("p={p} below 1")));
    }
    if !(gamma > 1.0) {
        return Err(Error::InvalidParameter(format!("gamma={gamma} must exceed 1")));
    }
    let big = dilate(b, gamma, &g)?.region();
    let r = b.radius();
    let grad = fracops::gradient_x(u)?;
    let lhs = region_average(&grad, &b.region(), p)?;
    let rhs = region_average(&grad, &big, 1.0)?
        + region_average(ff, &big, p)?
        + r * region_average(f, &big, lower_f64(p, g.n())?)?;
    let row = EstimateRow::new(b, lhs, rhs);

    let half_x = 0.5 * (1.0 + gamma) * r;
    let width_x = (gamma - 1.0) * r / 8.0;
    let ell = b.time_length();
    let half_t = 0.25 * (1.0 + gamma * gamma) * ell;
    let width_t = (gamma * gamma - 1.0) * ell / 16.0;
    let phi: Vec<f64> = (0..g.spatial_points())
        .map(|j| {
            let (_, ix) = g.split_index(j);
            (0..g.n())
                .map(|d| {
                    smooth_box(g.space_of(ix[d]), b.center_x()[d], half_x, width_x, g.period_x())
                })
                .product()
        })
        .collect();
    let means = weighted_mean(u, &phi)?;
    let sp = g.spatial_points();
    let m = g.m();
    let eta: Vec<f64> = (0..g.nt())
        .map(|it| smooth_box(g.time_of(it), b.center_t(), half_t, width_t, g.period_t()))
        .collect();
    let w_data: Vec<Complex64> = (0..g.points() * m)
        .map(|q| {
            let (p, al) = (q / m, q % m);
            let it = p / sp;
            (u.data()[q] - means[al].data()[it]) * eta[it]
        })
        .collect();
    let w = Field::from_vec(g, Shape::Scalar, w_data)?;
    let w_l2 = w.norm_l2();
    let grad_w_l2 = fracops::gradient_x(&w)?.norm_l2();
    let poincare_ratio = if grad_w_l2 > 0.0 { w_l2 / (r * grad_w_l2) } else { 0.0 };
    Ok(GradReverseHolder {
        row,
        intermediate: WeightedMeansReport { w_l2, grad_w_l2, poincare_ratio },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientKind, CoefficientParams};
    use crate::exponents::parse;
    use crate::rng::stream;
    use crate::sample::{BandLimited, CylinderFamily};
    use crate::solver::{solve, RightHandSide, SolverOptions};
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(1, 1, 64, 64, 0.25, 1.0).unwrap()
    }

    fn identity(g: Grid) -> CoefficientField {
        CoefficientField::generate(g, CoefficientKind::Constant, &CoefficientParams::default(), 0)
            .unwrap()
    }

    fn family(g: &Grid, count: usize, seed: u64) -> Vec<ParabolicCylinder> {
        let fam = CylinderFamily { count, r_min: 0.125, r_max: 0.25, gamma: 2.0, rho: 1.0 };
        fam.sample(g, None, &mut stream(seed, "family")).unwrap()
    }

    fn mode(g: Grid, tau: f64, xi: f64) -> Field {
        Field::from_fn(g, Shape::Scalar, |t, x, _| Complex64::from_polar(1.0, tau * t + xi * x[0]))
    }

    #[test]
    fn alpha_is_exact() {
        assert_eq!(exponents::holder_alpha(parse("2.1").unwrap()).unwrap(), parse("1/42").unwrap());
        let a1 = exponents::holder_alpha(parse("2.2").unwrap()).unwrap();
        let a2 = exponents::holder_alpha(parse("2.1").unwrap()).unwrap();
        assert_eq!(a1 - a2, parse("1/22").unwrap() - parse("1/42").unwrap());
    }

    #[test]
    fn scan_zero_and_single_mode() {
        let g = grid();
        let z = EnergyVector::new(Field::zeros(g, Shape::Scalar)).unwrap();
        let rows = higher_integrability_scan(
            &z,
            &Field::zeros(g, Shape::Scalar),
            &Field::zeros(g, Shape::Vector),
            &[2.1],
        )
        .unwrap();
        assert_eq!(rows[0].g_p, 0.0);
        assert_eq!(rows[0].ratio, 0.0);

        let (tau, xi) = (8.0 * PI, 2.0 * PI);
        let v = EnergyVector::new(mode(g, tau, xi)).unwrap();
        let f = v.field().scale(Complex64::new(xi * xi, tau));
        let ff = Field::zeros(g, Shape::Vector);
        let rows = higher_integrability_scan(&v, &f, &ff, &[2.05, 2.1, 2.2]).unwrap();
        let vol: f64 = 0.25;
        for row in rows {
            let p = row.p;
            let ps = 3.0 * p / (3.0 + p);
            let want = (xi + 2.0 * tau.sqrt()) * vol.powf(1.0 / p)
                / ((tau * tau + xi.powi(4)).sqrt() * vol.powf(1.0 / ps));
            assert!((row.ratio - want).abs() < 1e-10 * want);
            assert!((row.grad_p - xi * vol.powf(1.0 / p)).abs() < 1e-10);
        }
        assert!(higher_integrability_scan(&v, &f, &ff, &[2.0]).is_err());
        assert!(higher_integrability_scan(&v, &f, &ff, &[6.5]).is_err());
    }

    #[test]
    fn constant_solution() {
        let g = grid();
        let u = Field::constant(g, Shape::Scalar, Complex64::new(2.0, 0.0));
        let f = Field::zeros(g, Shape::Scalar);
        let ff = Field::zeros(g, Shape::Vector);
        for b in family(&g, 5, 1) {
            let rep = holder_time_report(&u, &f, &ff, &b, 2.0, 2.1).unwrap();
            assert_eq!(rep.holder_quotient, 0.0);
            assert!((rep.sup_norm - 2.0).abs() < 1e-12);
            assert!((rep.ratio - b.radius()).abs() < 1e-12);
            let gr = grad_reverse_holder_report(&u, &f, &ff, &b, 2.0, 2.1).unwrap();
            assert_eq!(gr.row.lhs, 0.0);
            assert!(gr.row.zero_rhs);
            assert_eq!(gr.row.ratio, 0.0);
        }
    }

    #[test]
    fn cosine_quotient_against_pair_sweep() {
        let g = grid();
        let om = 8.0 * PI;
        let u = Field::from_fn(g, Shape::Scalar, |t, x, _| {
            Complex64::new((om * t).cos() * (2.0 + (2.0 * PI * x[0]).sin()), 0.0)
        });
        let b = ParabolicCylinder::standard(0.2, &[0.4], 0.2).unwrap();
        let p = 2.1;
        let alpha = 1.0 / 42.0;
        let got = holder_quotient(&u, &b.interval(), &b.cube(), p, alpha).unwrap();
        // |u(t) - u(s)| = |cos - cos| |phi|, so the spatial factor separates
        let fp = b.region().footprint(&g).unwrap();
        let phi_avg = (fp
            .spatial
            .iter()
            .map(|&j| (2.0 + (2.0 * PI * g.space_of(j)).sin()).powf(p))
            .sum::<f64>()
            / fp.spatial.len() as f64)
            .powf(1.0 / p);
        let mut want = 0.0f64;
        let start = b.interval().start();
        let ts: Vec<f64> = (0..g.nt())
            .map(|i| g.time_of(i))
            .filter(|&t| t >= start - 1e-12 && t < start + b.time_length() - 1e-12)
            .collect();
        for (k, &t) in ts.iter().enumerate() {
            for &s in &ts[k + 1..] {
                want = want
                    .max(((om * t).cos() - (om * s).cos()).abs() * phi_avg / (s - t).powf(alpha));
            }
        }
        assert!((got - want).abs() < 1e-12 * want, "{got} {want}");
        // |t - s| < 1 here, so the quotient grows with the exponent
        let q0 = holder_quotient(&u, &b.interval(), &b.cube(), p, 0.0).unwrap();
        let q1 = holder_quotient(&u, &b.interval(), &b.cube(), p, 0.25).unwrap();
        assert!(q0 <= got && got <= q1);
    }

    #[test]
    fn homogeneity() {
        let g = grid();
        let mut rng = stream(2, "data");
        let band = BandLimited::new(4, 4);
        let u = band.sample(&g, Shape::Scalar, &mut rng).unwrap();
        let f = band.sample(&g, Shape::Scalar, &mut rng).unwrap();
        let ff = band.sample(&g, Shape::Vector, &mut rng).unwrap();
        for b in family(&g, 5, 3) {
            let r1 = holder_time_report(&u, &f, &ff, &b, 2.0, 2.1).unwrap().ratio;
            let r2 = holder_time_report(
                &u.scale_real(3.0),
                &f.scale_real(3.0),
                &ff.scale_real(3.0),
                &b,
                2.0,
                2.1,
            )
            .unwrap()
            .ratio;
            assert!((r1 - r2).abs() < 1e-10 * r1);
            let g1 = grad_reverse_holder_report(&u, &f, &ff, &b, 2.0, 2.1).unwrap().row.ratio;
            let g2 = grad_reverse_holder_report(
                &u.scale_real(3.0),
                &f.scale_real(3.0),
                &ff.scale_real(3.0),
                &b,
                2.0,
                2.1,
            )
            .unwrap()
            .row
            .ratio;
            assert!((g1 - g2).abs() < 1e-10 * g1);
        }
    }

    #[test]
    fn constant_gradient_modulus() {
        let g = grid();
        let u = mode(g, 0.0, 4.0 * PI);
        let z = Field::zeros(g, Shape::Scalar);
        let zv = Field::zeros(g, Shape::Vector);
        for b in family(&g, 5, 4) {
            let rep = grad_reverse_holder_report(&u, &z, &zv, &b, 2.0, 2.1).unwrap();
            assert!((rep.row.ratio - 1.0).abs() < 1e-12);
            assert!(rep.intermediate.w_l2 > 0.0 && rep.intermediate.poincare_ratio.is_finite());
        }
    }

    #[test]
    fn weighted_means_trivial() {
        let g = grid();
        let phi: Vec<f64> = (0..64).map(|j| 1.0 + 0.5 * (2.0 * PI * g.space_of(j)).cos()).collect();
        let u =
            Field::from_fn(g, Shape::Scalar, |t, _, _| Complex64::new((8.0 * PI * t).sin(), 0.0));
        let m = weighted_mean(&u, &phi).unwrap();
        for (it, z) in m[0].data().iter().enumerate() {
            assert!((z.re - (8.0 * PI * g.time_of(it)).sin()).abs() < 1e-13);
        }
        let d = fracops::derivative_series(&m[0]);
        for (it, z) in d.data().iter().enumerate() {
            assert!((z.re - 8.0 * PI * (8.0 * PI * g.time_of(it)).cos()).abs() < 1e-10);
        }
        let c = Field::constant(g, Shape::Scalar, Complex64::new(1.5, 0.0));
        let m = weighted_mean(&c, &phi).unwrap();
        assert!(m[0].data().iter().all(|z| (z.re - 1.5).abs() < 1e-13));
        let zero_formula = d_dt_weighted_mean(
            &c,
            &identity(g),
            &Field::zeros(g, Shape::Scalar),
            &Field::zeros(g, Shape::Vector),
            &phi,
        )
        .unwrap();
        assert!(zero_formula[0].data().iter().all(|z| z.norm() < 1e-12));
        assert!(matches!(weighted_mean(&c, &vec![0.0; 64]), Err(Error::ZeroWeight)));
    }

    #[test]
    fn weighted_means_heat_mode() {
        let g = grid();
        let (tau, xi) = (8.0 * PI, 2.0 * PI);
        let u = mode(g, tau, xi);
        let f = u.scale(Complex64::new(xi * xi, tau));
        let phi: Vec<f64> = (0..64).map(|j| 1.0 + 0.5 * (2.0 * PI * g.space_of(j)).cos()).collect();
        let res =
            weighted_mean_consistency(&u, &identity(g), &f, &Field::zeros(g, Shape::Vector), &phi)
                .unwrap();
        assert!(res < 1e-8, "{res:e}");
    }

    #[test]
    fn weighted_means_rough_solution() {
        let g = grid();
        let a = CoefficientField::generate(
            g,
            CoefficientKind::TimeCheckerboard,
            &CoefficientParams { cell_t: 0.25 / 8.0, ..CoefficientParams::default() },
            42,
        )
        .unwrap();
        let f0 = BandLimited::new(4, 4).sample(&g, Shape::Scalar, &mut stream(5, "f")).unwrap();
        let rhs = RightHandSide::new(f0.clone(), Field::zeros(g, Shape::Vector)).unwrap();
        let (v, _) = solve(&a, 0.0, &rhs, &SolverOptions::with_tol(1e-12)).unwrap();
        let u = v.into_field();
        let f = f0.sub(&u).unwrap();
        let phi: Vec<f64> =
            (0..64).map(|j| smooth_box(g.space_of(j), 0.5, 0.2, 0.03, 1.0)).collect();
        let res =
            weighted_mean_consistency(&u, &a, &f, &Field::zeros(g, Shape::Vector), &phi).unwrap();
        assert!(res < 1e-8, "{res:e}");
    }
}
