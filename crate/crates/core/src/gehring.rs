//! Maximal operators, the tail functional `a_u(B)`, the Gehring lemma with
//! tail as a measured implication, and the non-local reverse Hölder
//! inequality for the parabolic differential.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{EstimateReport, EstimateRow};
use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::exponents::{self, two_lower, ExponentConfig};
use crate::grid::{
    axis_indices, lp_norm, mixed_norm, Cube, Field, Grid, ParabolicCylinder, Region, TimeInterval,
    TimeSeries,
};
use crate::sample::BandLimited;
use crate::solver::{residual_probe, EnergyVector};

/// Per-slice spatial means of `|u|^p` over a cube, `t -> avg_Q |u(t, .)|^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeProfile {
    values: Vec<f64>,
    period: f64,
}

impl TimeProfile {
    pub fn of(u: &Field, cube: &Cube, p: f64) -> Result<Self> {
        let g = *u.grid();
        if 2.0 * cube.half() > g.period_x() + 1e-12 {
            return Err(Error::WrapsPeriod);
        }
        let whole = TimeInterval::new(0.0, g.period_t())?;
        let fp = Region::new(whole, *cube).footprint(&g)?;
        if fp.spatial.is_empty() {
            return Err(Error::EmptyFootprint);
        }
        let sp = g.spatial_points();
        let count = fp.spatial.len() as f64;
        let values = (0..g.nt())
            .map(|it| {
                fp.spatial
                    .iter()
                    .map(|&j| {
                        let q = it * sp + j;
                        if p == 2.0 {
                            u.at(q).iter().map(|z| z.norm_sqr()).sum::<f64>()
                        } else {
                            u.magnitude_at(q).powf(p)
                        }
                    })
                    .sum::<f64>()
                    / count
            })
            .collect();
        Ok(Self { values, period: g.period_t() })
    }

    /// Profile of a function of time alone; `values` are taken as given.
    pub fn from_values(values: Vec<f64>, period: f64) -> Self {
        Self { values, period }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    fn dt(&self) -> f64 {
        self.period / self.values.len() as f64
    }

    pub fn mean_over(&self, interval: &TimeInterval) -> Result<f64> {
        let idx = axis_indices(interval.start(), interval.length(), self.dt(), self.values.len());
        if idx.is_empty() {
            return Err(Error::EmptyFootprint);
        }
        Ok(idx.iter().map(|&i| self.values[i]).sum::<f64>() / idx.len() as f64)
    }

    pub fn global_mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Index `J` of the first dilate `4^J I` covering the period.
fn covering_index(length: f64, period: f64) -> usize {
    let mut j = 0;
    let mut l = length;
    while l < period {
        l *= 4.0;
        j += 1;
    }
    j
}

/// `sum_j 2^{-j-1} avg_{4^j I} profile`, with `2^{-J}` times the global mean for
/// all `j >= J` once `4^J I` covers the period.
pub fn dyadic_tail(profile: &TimeProfile, interval: &TimeInterval) -> Result<f64> {
    let big_j = covering_index(interval.length(), profile.period());
    let mut sum = 0.0;
    let mut w = 0.5;
    let mut dilate = *interval;
    for _ in 0..big_j {
        sum += w * profile.mean_over(&dilate)?;
        dilate = dilate.scaled(4.0);
        w *= 0.5;
    }
    Ok(sum + 2.0 * w * profile.global_mean())
}

/// `(1 + |k|^{3/2})^{-1}`.
pub fn translate_weight(k: i64) -> f64 {
    1.0 / (1.0 + (k.unsigned_abs() as f64).powf(1.5))
}

const EXPLICIT_TERMS: u64 = 1 << 20;

/// `sum_{k >= 1} (1 + k^{3/2})^{-1}`.
fn half_weight_total() -> f64 {
    static TOTAL: OnceLock<f64> = OnceLock::new();
    *TOTAL.get_or_init(|| {
        let explicit: f64 = (1..=EXPLICIT_TERMS).rev().map(|k| translate_weight(k as i64)).sum();
        let n = EXPLICIT_TERMS as f64;
        // Euler-Maclaurin for sum_{k > n} with 1/(1+x) expanded in x^{-1}
        let mut integral = 0.0;
        for i in 0..4 {
            let a = 1.5 * (i + 1) as f64;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            integral += sign * n.powf(1.0 - a) / (a - 1.0);
        }
        let f = 1.0 / (1.0 + n.powf(1.5));
        let df = -1.5 * n.sqrt() * f * f;
        explicit + integral - 0.5 * f - df / 12.0
    })
}

/// `sum_{|k| > k_max} (1 + |k|^{3/2})^{-1}`.
pub fn translate_remainder(k_max: u64) -> f64 {
    let head: f64 = (1..=k_max).map(|k| translate_weight(k as i64)).sum();
    2.0 * (half_weight_total() - head)
}

/// `sum_{k in Z} (1 + |k|^{3/2})^{-1}`.
pub fn translate_weight_total() -> f64 {
    1.0 + 2.0 * half_weight_total()
}

/// `sum_k w_k avg(I_k)` with `I_k = I + k l(I)`: explicit for `|k| <= ceil(T / l)`,
/// the remaining weight multiplies `global`.
pub fn translate_sum_with<F>(
    interval: &TimeInterval,
    period: f64,
    avg: F,
    global: f64,
) -> Result<f64>
where
    F: Fn(&TimeInterval) -> Result<f64>,
{
    let k_max = (period / interval.length()).ceil() as i64;
    let mut sum = 0.0;
    for k in -k_max..=k_max {
        sum += translate_weight(k) * avg(&interval.translated(k, period))?;
    }
    Ok(sum + translate_remainder(k_max as u64) * global)
}

pub fn translate_sum(profile: &TimeProfile, interval: &TimeInterval) -> Result<f64> {
    translate_sum_with(interval, profile.period(), |i| profile.mean_over(i), profile.global_mean())
}

fn check_nonnegative(u: &Field) -> Result<()> {
    if u.comps() != 1 {
        return Err(Error::ShapeMismatch("nonnegative input must have one component".into()));
    }
    let mut worst = 0.0f64;
    for z in u.data() {
        if z.im != 0.0 {
            return Err(Error::NegativeInput(-z.im.abs()));
        }
        worst = worst.min(z.re);
    }
    if worst < 0.0 {
        Err(Error::NegativeInput(worst))
    } else {
        Ok(())
    }
}

fn enlarged_cube(b: &ParabolicCylinder, gamma: f64, grid: &Grid) -> Result<Cube> {
    let cube = b.cube().scaled(gamma);
    if 2.0 * cube.half() > grid.period_x() + 1e-12 {
        return Err(Error::WrapsPeriod);
    }
    Ok(cube)
}

/// `a_u(B) = sum_j 2^{-j-1} avg_{4^j I x gamma Q} u` for `u >= 0`.
pub fn tail_functional(u: &Field, b: &ParabolicCylinder, gamma: f64) -> Result<f64> {
    check_nonnegative(u)?;
    let cube = enlarged_cube(b, gamma, u.grid())?;
    dyadic_tail(&TimeProfile::of(u, &cube, 1.0)?, &b.interval())
}

fn check_range(e: f64, upper: f64, what: &str) -> Result<()> {
    if e.is_finite() && (0.0..upper).contains(&e) {
        Ok(())
    } else {
        Err(Error::InvalidExponent(format!("{what}={e} outside [0, {upper})")))
    }
}

/// Sums of `v` over every periodic window of length `w`, indexed by window start.
fn window_sums(v: &[f64], w: usize) -> Vec<f64> {
    let n = v.len();
    let mut s: f64 = v[..w].iter().sum();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        out.push(s);
        s += v[(i + w) % n] - v[i];
    }
    if w == n {
        out.fill(v.iter().sum());
    }
    out
}

/// `out[i] = max_{i - w < j <= i} v[j]` periodically, for `w` dividing `v.len()`.
fn window_max(v: &[f64], w: usize) -> Vec<f64> {
    let n = v.len();
    let mut pre = v.to_vec();
    let mut suf = v.to_vec();
    for b in (0..n).step_by(w) {
        for i in b + 1..b + w {
            pre[i] = pre[i].max(pre[i - 1]);
        }
        for i in (b..b + w - 1).rev() {
            suf[i] = suf[i].max(suf[i + 1]);
        }
    }
    (0..n)
        .map(|i| {
            let start = (i + n + 1 - w) % n;
            if start.is_multiple_of(w) {
                pre[start + w - 1]
            } else {
                suf[start].max(pre[i])
            }
        })
        .collect()
}

/// Largest `weight(2^k) * average` over windows of length `2^k` containing each sample.
fn maximal_1d(v: &[f64], weight: impl Fn(usize) -> f64) -> Vec<f64> {
    let n = v.len();
    let mut best = vec![0.0f64; n];
    let mut w = 1;
    while w <= n {
        let c = weight(w) / w as f64;
        let m = window_max(&window_sums(v, w), w);
        for (b, x) in best.iter_mut().zip(m) {
            *b = b.max(c * x);
        }
        w *= 2;
    }
    best
}

/// Same for square windows on an `s x s` periodic array, stored row-major.
fn maximal_2d(v: &[f64], s: usize, weight: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut best = vec![0.0f64; s * s];
    let mut w = 1;
    while w <= s {
        let c = weight(w) / (w * w) as f64;
        let mut a = vec![0.0; s * s];
        for i in 0..s {
            let row = window_sums(&v[i * s..(i + 1) * s], w);
            a[i * s..(i + 1) * s].copy_from_slice(&row);
        }
        let mut col = vec![0.0; s];
        let mut sums = vec![0.0; s * s];
        for j in 0..s {
            for i in 0..s {
                col[i] = a[i * s + j];
            }
            for (i, x) in window_sums(&col, w).into_iter().enumerate() {
                sums[i * s + j] = x;
            }
        }
        let mut rows_max = vec![0.0; s * s];
        for i in 0..s {
            let m = window_max(&sums[i * s..(i + 1) * s], w);
            rows_max[i * s..(i + 1) * s].copy_from_slice(&m);
        }
        for j in 0..s {
            for i in 0..s {
                col[i] = rows_max[i * s + j];
            }
            for (i, x) in window_max(&col, w).into_iter().enumerate() {
                let q = i * s + j;
                best[q] = best[q].max(c * x);
            }
        }
        w *= 2;
    }
    best
}

fn magnitudes(u: &Field) -> Vec<f64> {
    (0..u.grid().points()).map(|p| u.magnitude_at(p)).collect()
}

/// `sup_{I containing t} l(I)^alpha avg_I |u(., x)|` over dyadic lengths `l = 2^k dt`.
pub fn fractional_maximal_t(u: &Field, alpha: f64) -> Result<Field> {
    check_range(alpha, 1.0, "alpha")?;
    let g = *u.grid();
    let mags = magnitudes(u);
    let sp = g.spatial_points();
    let nt = g.nt();
    let dt = g.dt();
    let columns: Vec<Vec<f64>> = (0..sp)
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = (0..nt).map(|it| mags[it * sp + j]).collect();
            maximal_1d(&col, |w| (w as f64 * dt).powf(alpha))
        })
        .collect();
    let mut out = vec![0.0; g.points()];
    for (j, col) in columns.iter().enumerate() {
        for it in 0..nt {
            out[it * sp + j] = col[it];
        }
    }
    Field::density(g, out)
}

/// `sup_{Q containing x} r(Q)^beta avg_Q |u(t, .)|` over dyadic cubes of side `2^k dx`,
/// `r` the half side.
pub fn fractional_maximal_x(u: &Field, beta: f64) -> Result<Field> {
    let g = *u.grid();
    check_range(beta, g.n() as f64, "beta")?;
    let mags = magnitudes(u);
    let sp = g.spatial_points();
    let dx = g.dx();
    let weight = |w: usize| (0.5 * w as f64 * dx).powf(beta);
    let slices: Vec<Vec<f64>> =
        mags.par_chunks(sp)
            .map(|slice| {
                if g.n() == 1 {
                    maximal_1d(slice, weight)
                } else {
                    maximal_2d(slice, g.nx(), weight)
                }
            })
            .collect();
    Field::density(g, slices.concat())
}

pub fn maximal_t(u: &Field) -> Result<Field> {
    fractional_maximal_t(u, 0.0)
}

pub fn maximal_x(u: &Field) -> Result<Field> {
    fractional_maximal_x(u, 0.0)
}

/// The hypothesis of the Gehring lemma with tail measured on one cylinder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisRow {
    pub center_t: f64,
    pub center_x: Vec<f64>,
    pub r: f64,
    /// `(avg_B g^2)^{1/2}`.
    pub lhs: f64,
    pub tail_g: f64,
    pub tail_f: f64,
    pub tail_h: f64,
    /// Smallest `A` with `lhs <= A a_g + a_{f^2}^{1/2} + r a_{h^s}^{1/s}`.
    pub a_needed: f64,
    /// Smallest `A` with `lhs <= A (a_g + a_{f^2}^{1/2} + r a_{h^s}^{1/s})`.
    pub a_joint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub rows: Vec<HypothesisRow>,
    pub a_est: f64,
    pub a_joint: f64,
}

pub fn gehring_hypothesis_constant(
    g: &Field,
    f: &Field,
    h: &Field,
    s: f64,
    gamma: f64,
    cylinders: &[ParabolicCylinder],
) -> Result<HypothesisReport> {
    for u in [g, f, h] {
        check_nonnegative(u)?;
        g.grid().ensure_same(u.grid())?;
    }
    if !(s.is_finite() && s >= 1.0) {
        return Err(Error::InvalidExponent(format!("s={s} below 1")));
    }
    let rows = cylinders
        .par_iter()
        .map(|b| {
            let cube = enlarged_cube(b, gamma, g.grid())?;
            let lhs = crate::grid::region_average(g, &b.region(), 2.0)?;
            let i = b.interval();
            let tail_g = dyadic_tail(&TimeProfile::of(g, &cube, 1.0)?, &i)?;
            let tail_f = dyadic_tail(&TimeProfile::of(f, &cube, 2.0)?, &i)?;
            let tail_h = dyadic_tail(&TimeProfile::of(h, &cube, s)?, &i)?;
            let data = tail_f.sqrt() + b.radius() * tail_h.powf(1.0 / s);
            let rest = lhs - data;
            let a_needed = if rest <= 0.0 {
                0.0
            } else if tail_g > 0.0 {
                rest / tail_g
            } else {
                f64::INFINITY
            };
            let a_joint = match tail_g + data {
                d if d > 0.0 => lhs / d,
                _ if lhs > 0.0 => f64::INFINITY,
                _ => 0.0,
            };
            Ok(HypothesisRow {
                center_t: b.center_t(),
                center_x: b.center_x().to_vec(),
                r: b.radius(),
                lhs,
                tail_g,
                tail_f,
                tail_h,
                a_needed,
                a_joint,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let a_est = rows.iter().map(|r| r.a_needed).fold(0.0, f64::max);
    let a_joint = rows.iter().map(|r| r.a_joint).fold(0.0, f64::max);
    Ok(HypothesisReport { rows, a_est, a_joint })
}

/// `||g||_p` against `||f||_p` plus an `h` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConclusionReport {
    pub p: f64,
    pub lhs: f64,
    pub f_term: f64,
    pub h_term: f64,
    pub ratio: f64,
}

fn conclusion(p: f64, lhs: f64, f_term: f64, h_term: f64) -> ConclusionReport {
    let rhs = f_term + h_term;
    let ratio = if lhs == 0.0 {
        0.0
    } else if rhs > 0.0 {
        lhs / rhs
    } else {
        f64::INFINITY
    };
    ConclusionReport { p, lhs, f_term, h_term, ratio }
}

/// Mixed-norm form: `h` enters as `||h^s||_{L^{q_a}_t L^{q_b}_x}^{1/s}`.
pub fn gehring_conclusion_ratio(
    g: &Field,
    f: &Field,
    h: &Field,
    cfg: &ExponentConfig,
) -> Result<ConclusionReport> {
    cfg.validate()?;
    let p = exponents::to_f64(&cfg.p);
    let s = exponents::to_f64(&cfg.s);
    let lhs = lp_norm(g, p)?;
    let f_term = lp_norm(f, p)?;
    let h_term = mixed_norm(
        &h.magnitude_pow(s),
        exponents::to_f64(&cfg.q_alpha),
        exponents::to_f64(&cfg.q_beta),
    )?
    .powf(1.0 / s);
    Ok(conclusion(p, lhs, f_term, h_term))
}

/// Sobolev form: `h` enters as `||h||_{p_*}`.
pub fn gehring_conclusion_ratio_sobolev(
    g: &Field,
    f: &Field,
    h: &Field,
    p: f64,
) -> Result<ConclusionReport> {
    let n = g.grid().n();
    let p_low = exponents::to_f64(&exponents::sobolev_lower(exponents::from_f64(p)?, n)?);
    Ok(conclusion(p, lp_norm(g, p)?, lp_norm(f, p)?, lp_norm(h, p_low)?))
}

/// A weak solution of `d_t v - div A grad v + c v = f + div F` on the whole torus.
#[derive(Debug, Clone, Copy)]
pub struct SolutionTriple<'a> {
    pub v: &'a EnergyVector,
    pub a: &'a CoefficientField,
    pub c: f64,
    pub f: &'a Field,
    pub ff: &'a Field,
}

impl SolutionTriple<'_> {
    /// Largest relative weak residual over 20 band-limited test functions.
    pub fn verify(&self, tol: f64) -> Result<f64> {
        let res = residual_probe(
            self.v.field(),
            self.a,
            self.c,
            self.f,
            self.ff,
            20,
            &BandLimited::new(8, 8),
            0,
        )?;
        if res > tol {
            return Err(Error::UnverifiedSolution { residual: res, tol });
        }
        Ok(res)
    }
}

/// Per cylinder, `(avg_B g^2)^{1/2}` with `g = |grad v| + |D^{1/2} v| + |H D^{1/2} v|`
/// against `sum_k w_k [avg g + (avg |F|^2)^{1/2} + r (avg |f|^{2_*})^{1/2_*}]` over
/// `I_k x gamma Q`.
pub fn nonlocal_reverse_holder(
    sol: &SolutionTriple<'_>,
    gamma: f64,
    cylinders: &[ParabolicCylinder],
    tol: f64,
) -> Result<EstimateReport> {
    sol.verify(tol)?;
    let g = sol.v.parts().derivative_density();
    let grid = *g.grid();
    let s = exponents::to_f64(&two_lower(grid.n()));
    let rows = cylinders
        .par_iter()
        .map(|b| {
            let cube = enlarged_cube(b, gamma, &grid)?;
            let lhs = crate::grid::region_average(&g, &b.region(), 2.0)?;
            let pg = TimeProfile::of(&g, &cube, 1.0)?;
            let pf = TimeProfile::of(sol.ff, &cube, 2.0)?;
            let ph = TimeProfile::of(sol.f, &cube, s)?;
            let r = b.radius();
            let term = |m_g: f64, m_f: f64, m_h: f64| m_g + m_f.sqrt() + r * m_h.powf(1.0 / s);
            let rhs = translate_sum_with(
                &b.interval(),
                grid.period_t(),
                |i| Ok(term(pg.mean_over(i)?, pf.mean_over(i)?, ph.mean_over(i)?)),
                term(pg.global_mean(), pf.global_mean(), ph.global_mean()),
            )?;
            Ok(EstimateRow::new(b, lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateReport::new("nonlocal-reverse-holder", rows))
}

/// The two weighted sums of interval averages of `|h|` that are comparable up to constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rearrangement {
    /// `sum_k (1 + |k|^{3/2})^{-1} avg_{I_k} |h|`.
    pub translates: f64,
    /// `sum_j 2^{-j} avg_{4^j I} |h|`.
    pub dilates: f64,
    pub ratio: f64,
}

pub fn rearrangement_check(h: &TimeSeries, interval: &TimeInterval) -> Result<Rearrangement> {
    let profile = TimeProfile::from_values(h.data().iter().map(|z| z.norm()).collect(), h.period());
    let translates = translate_sum(&profile, interval)?;
    let dilates = 2.0 * dyadic_tail(&profile, interval)?;
    let ratio = if dilates > 0.0 { translates / dilates } else { 0.0 };
    Ok(Rearrangement { translates, dilates, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientKind, CoefficientParams};
    use crate::exponents::parse;
    use crate::grid::region_average;
    use crate::grid::Shape;
    use crate::rng::stream;
    use crate::sample::CylinderFamily;
    use crate::solver::{solve, RightHandSide, SolverOptions};
    use num_complex::Complex64;
    use rand::Rng;
    use std::f64::consts::PI;

    fn grid1(nt: usize, nx: usize) -> Grid {
        Grid::new(1, 1, nt, nx, 0.25, 1.0).unwrap()
    }

    fn cylinders(g: &Grid, count: usize, seed: u64) -> Vec<ParabolicCylinder> {
        let fam = CylinderFamily { count, r_min: 0.125, r_max: 0.25, gamma: 2.0, rho: 1.0 };
        fam.sample(g, None, &mut stream(seed, "family")).unwrap()
    }

    fn random_density(g: Grid, seed: u64) -> Field {
        let mut r = stream(seed, "density");
        Field::density(g, (0..g.points()).map(|_| r.random_range(0.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn weights() {
        let brute: f64 = (1..=4_000_000u64).map(|k| translate_weight(k as i64)).sum();
        let n = 4.0e6f64;
        let want = brute + 2.0 / n.sqrt() - 0.5 * n.powf(-1.5);
        assert!((half_weight_total() - want).abs() < 1e-12, "{} {want}", half_weight_total());
        let direct: f64 = (-5i64..=5).map(translate_weight).sum();
        assert!((translate_weight_total() - translate_remainder(5) - direct).abs() < 1e-14);
    }

    #[test]
    fn tail_of_constants() {
        let g = grid1(64, 64);
        let u = Field::constant(g, Shape::Density, Complex64::new(2.5, 0.0));
        for b in cylinders(&g, 20, 1) {
            assert!((tail_functional(&u, &b, 2.0).unwrap() - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn tail_outside_support_vanishes() {
        let g = grid1(64, 64);
        let u = Field::from_fn(g, Shape::Density, |_, x, _| {
            Complex64::new(if x[0] >= 0.5 { 1.0 } else { 0.0 }, 0.0)
        });
        let b = ParabolicCylinder::standard(0.3, &[0.2], 0.1).unwrap();
        assert_eq!(tail_functional(&u, &b, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn tail_matches_direct_summation() {
        let g = grid1(128, 64);
        let u = random_density(g, 2);
        for b in cylinders(&g, 20, 3) {
            let cube = b.cube().scaled(2.0);
            let mut want = 0.0;
            let mut j = 0;
            loop {
                let len = b.time_length() * 4f64.powi(j);
                if len >= 0.25 {
                    let all = Region::new(TimeInterval::new(0.0, 0.25).unwrap(), cube);
                    want += 0.5f64.powi(j) * region_average(&u, &all, 1.0).unwrap();
                    break;
                }
                let reg = Region::new(TimeInterval::centered(b.center_t(), len).unwrap(), cube);
                want += 0.5f64.powi(j + 1) * region_average(&u, &reg, 1.0).unwrap();
                j += 1;
            }
            let got = tail_functional(&u, &b, 2.0).unwrap();
            assert!((got - want).abs() < 1e-12, "{got} {want}");
        }
    }

    #[test]
    fn tail_rejects_negative() {
        let g = grid1(16, 16);
        let u = Field::constant(g, Shape::Density, Complex64::new(-1.0, 0.0));
        let b = ParabolicCylinder::standard(0.5, &[0.5], 0.1).unwrap();
        assert!(matches!(tail_functional(&u, &b, 2.0), Err(Error::NegativeInput(_))));
    }

    #[test]
    fn tail_stabilizes_at_global_mean() {
        let g = grid1(64, 64);
        let u = random_density(g, 4);
        let global = u.data().iter().map(|z| z.re).sum::<f64>() / g.points() as f64;
        let b = ParabolicCylinder::standard(0.5, &[0.5], 0.5).unwrap();
        assert!((tail_functional(&u, &b, 1.0).unwrap() - global).abs() < 1e-12);
    }

    /// Brute-force maximum over every periodic window of dyadic length containing `i`.
    fn sweep_1d(v: &[f64], i: usize, weight: impl Fn(usize) -> f64) -> f64 {
        let n = v.len();
        let mut best = 0.0f64;
        let mut w = 1;
        while w <= n {
            for start in 0..n {
                if (i + n - start) % n < w {
                    let avg = (0..w).map(|k| v[(start + k) % n]).sum::<f64>() / w as f64;
                    best = best.max(weight(w) * avg);
                }
            }
            w *= 2;
        }
        best
    }

    #[test]
    fn maximal_x_indicator() {
        let g = grid1(4, 32);
        let u = Field::from_fn(g, Shape::Scalar, |_, x, _| {
            Complex64::new(if x[0] < 0.5 { 1.0 } else { 0.0 }, 0.0)
        });
        let m = maximal_x(&u).unwrap();
        let v: Vec<f64> = (0..32).map(|j| if j < 16 { 1.0 } else { 0.0 }).collect();
        assert_eq!(m.data()[8].re, 1.0);
        for j in 0..32 {
            assert!((m.data()[j].re - sweep_1d(&v, j, |_| 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn maximal_matches_sweep() {
        let g = grid1(32, 32);
        let u = random_density(g, 5);
        let mt = fractional_maximal_t(&u, 0.3).unwrap();
        let mx = fractional_maximal_x(&u, 0.7).unwrap();
        for j in [0usize, 7, 31] {
            let col: Vec<f64> = (0..32).map(|it| u.data()[it * 32 + j].re).collect();
            for it in [0usize, 5, 16, 31] {
                let want = sweep_1d(&col, it, |w| (w as f64 * 0.25 / 32.0).powf(0.3));
                assert!((mt.data()[it * 32 + j].re - want).abs() < 1e-13);
                let row: Vec<f64> = (0..32).map(|k| u.data()[it * 32 + k].re).collect();
                let want = sweep_1d(&row, j, |w| (w as f64 / 64.0).powf(0.7));
                assert!((mx.data()[it * 32 + j].re - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn maximal_2d_matches_sweep() {
        let g = Grid::new(2, 1, 4, 8, 1.0, 1.0).unwrap();
        let u = random_density(g, 6);
        let m = fractional_maximal_x(&u, 0.5).unwrap();
        let s = 8;
        for it in 0..4 {
            let slice = &u.data()[it * 64..(it + 1) * 64];
            for p in 0..64 {
                let (pi, pj) = (p / s, p % s);
                let mut best = 0.0f64;
                let mut w = 1;
                while w <= s {
                    for a in 0..s {
                        for b in 0..s {
                            if (pi + s - a) % s < w && (pj + s - b) % s < w {
                                let mut sum = 0.0;
                                for di in 0..w {
                                    for dj in 0..w {
                                        sum += slice[((a + di) % s) * s + (b + dj) % s].re;
                                    }
                                }
                                let r = 0.5 * w as f64 / 8.0;
                                best = best.max(r.sqrt() * sum / (w * w) as f64);
                            }
                        }
                    }
                    w *= 2;
                }
                assert!((m.data()[it * 64 + p].re - best).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn maximal_of_constants() {
        let g = grid1(16, 16);
        let u = Field::constant(g, Shape::Scalar, Complex64::new(1.0, 0.0));
        assert!(maximal_t(&u).unwrap().data().iter().all(|z| (z.re - 1.0).abs() < 1e-15));
        let m = fractional_maximal_x(&u, 0.5).unwrap();
        assert!(m.data().iter().all(|z| (z.re - 0.5f64.sqrt()).abs() < 1e-15));
        assert!(fractional_maximal_t(&u, 1.0).is_err());
        assert!(fractional_maximal_x(&u, 1.0).is_err());
    }

    #[test]
    fn dyadic_average_dominated_by_composed_maximal() {
        let g = grid1(32, 32);
        let u = random_density(g, 7);
        let mm = maximal_t(&maximal_x(&u).unwrap()).unwrap();
        // aligned dyadic boxes [a, a + 2^k dt) x [b, b + 2^l dx) containing (it, j)
        let (it, j) = (13usize, 21usize);
        for k in 0..=5 {
            for l in 0..=5 {
                let (wt, wx) = (1usize << k, 1usize << l);
                let (a, b) = (it / wt * wt, j / wx * wx);
                let mut sum = 0.0;
                for s in a..a + wt {
                    for y in b..b + wx {
                        sum += u.data()[s * 32 + y].re;
                    }
                }
                assert!(sum / (wt * wx) as f64 <= mm.data()[it * 32 + j].re + 1e-14);
            }
        }
    }

    #[test]
    fn hypothesis_trivial_cases() {
        let g = grid1(64, 64);
        let c = Field::constant(g, Shape::Density, Complex64::new(3.0, 0.0));
        let z = Field::zeros(g, Shape::Density);
        let fam = cylinders(&g, 10, 8);
        let rep = gehring_hypothesis_constant(&c, &z, &z, 1.2, 2.0, &fam).unwrap();
        assert!((rep.a_est - 1.0).abs() < 1e-13);
        assert!((rep.a_joint - 1.0).abs() < 1e-13);
        let rep = gehring_hypothesis_constant(&z, &c, &c, 1.2, 2.0, &fam).unwrap();
        assert_eq!(rep.a_est, 0.0);
        assert_eq!(rep.a_joint, 0.0);
    }

    #[test]
    fn conclusion_trivial_cases() {
        let g = grid1(32, 32);
        let u = random_density(g, 9);
        let z = Field::zeros(g, Shape::Density);
        let cfg =
            crate::exponents::solve_exponents(parse("6/5").unwrap(), parse("2.2").unwrap(), 1)
                .unwrap();
        let rep = gehring_conclusion_ratio(&u, &u, &z, &cfg).unwrap();
        assert!((rep.ratio - 1.0).abs() < 1e-14);
        assert_eq!(gehring_conclusion_ratio(&z, &u, &u, &cfg).unwrap().ratio, 0.0);
        let rep = gehring_conclusion_ratio_sobolev(&u, &z, &u, 2.1).unwrap();
        let want = lp_norm(&u, 2.1).unwrap() / lp_norm(&u, 2.1 * 3.0 / 5.1).unwrap();
        assert!((rep.ratio - want).abs() < 1e-12 * want);
    }

    #[test]
    fn single_mode_reverse_holder() {
        let g = grid1(64, 64);
        let a = CoefficientField::generate(
            g,
            CoefficientKind::Constant,
            &CoefficientParams::default(),
            0,
        )
        .unwrap();
        let (tau, xi) = (8.0 * PI, 2.0 * PI);
        let phase = |t: f64, x: &[f64]| Complex64::from_polar(1.0, tau * t + xi * x[0]);
        let f0 = Field::from_fn(g, Shape::Scalar, |t, x, _| {
            Complex64::new(xi * xi + 1.0, tau) * phase(t, x)
        });
        let rhs = RightHandSide::new(f0, Field::zeros(g, Shape::Vector)).unwrap();
        let (v, _) = solve(&a, 0.0, &rhs, &SolverOptions::with_tol(1e-12)).unwrap();
        // zero-order-free form: f = (i tau + xi^2) v
        let f =
            Field::from_fn(g, Shape::Scalar, |t, x, _| Complex64::new(xi * xi, tau) * phase(t, x));
        let ff = Field::zeros(g, Shape::Vector);
        let sol = SolutionTriple { v: &v, a: &a, c: 0.0, f: &f, ff: &ff };
        let fam = cylinders(&g, 10, 10);
        let rep = nonlocal_reverse_holder(&sol, 2.0, &fam, 1e-8).unwrap();
        let gval = xi + 2.0 * tau.sqrt();
        let fmod = (tau * tau + xi.powi(4)).sqrt();
        let brute: f64 = (1..=4_000_000u64).map(|k| translate_weight(k as i64)).sum();
        let w = 1.0 + 2.0 * (brute + 2.0 / 2000.0 - 0.5 * 4.0e6f64.powf(-1.5));
        for row in &rep.rows {
            let want = gval / (w * (gval + row.r * fmod));
            assert!((row.ratio - want).abs() < 1e-9 * want, "{} {want}", row.ratio);
        }

        let bad = Field::zeros(g, Shape::Scalar);
        let sol = SolutionTriple { v: &v, a: &a, c: 0.0, f: &bad, ff: &ff };
        assert!(matches!(
            nonlocal_reverse_holder(&sol, 2.0, &fam, 1e-8),
            Err(Error::UnverifiedSolution { .. })
        ));
    }

    #[test]
    fn rearrangement_comparable() {
        let mut rng = stream(11, "rearrange");
        for trial in 0..50 {
            let data: Vec<Complex64> = (0..256)
                .map(|_| {
                    let x: f64 = rng.random_range(0.0..1.0);
                    Complex64::new(x.powi(1 + trial % 8), 0.0)
                })
                .collect();
            let h = TimeSeries::new(1.0, data).unwrap();
            let len = 2f64.powi(-(2 + trial % 5));
            let i = TimeInterval::centered(rng.random_range(0.0..1.0), len).unwrap();
            let rep = rearrangement_check(&h, &i).unwrap();
            assert!(rep.ratio > 0.1 && rep.ratio < 10.0, "{rep:?}");
        }
        let one = TimeSeries::from_fn(1.0, 64, |_| Complex64::new(1.0, 0.0)).unwrap();
        let rep = rearrangement_check(&one, &TimeInterval::new(0.0, 0.25).unwrap()).unwrap();
        assert!((rep.dilates - 2.0).abs() < 1e-14);
        assert!((rep.translates - translate_weight_total()).abs() < 1e-12);
    }
}
