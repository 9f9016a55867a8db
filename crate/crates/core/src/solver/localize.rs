use num_complex::Complex64;

use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::fft::{self, Axes};
use crate::fracops;
use crate::grid::{Field, Region, Shape};
use crate::sample;

/// `v = chi u` with the data `(f~, F~)` of the equation it solves.
#[derive(Debug, Clone)]
pub struct Localized {
    pub v: Field,
    pub f: Field,
    pub ff: Field,
    /// Strong-form defect `d_t v - div A grad v - f~ - div F~` of the discrete product rule.
    pub defect: Field,
}

impl Localized {
    /// `f~ + defect`, for which `(v, f~ + defect, F~)` satisfies the strong form exactly.
    pub fn consistent_f(&self) -> Field {
        self.f.add(&self.defect).expect("same grid")
    }
}

fn check_cutoff(chi: &Field) -> Result<()> {
    if chi.comps() != 1 {
        return Err(Error::ShapeMismatch("cut-off must have one component".into()));
    }
    const SLACK: f64 = 1e-12;
    for z in chi.data() {
        if z.im.abs() > SLACK || z.re < -SLACK || z.re > 1.0 + SLACK {
            return Err(Error::InvalidParameter(format!("cut-off value {z} outside [0, 1]")));
        }
    }
    Ok(())
}

/// Localizes a weak solution of `d_t u - div A grad u = f + div F` by the cut-off `chi`:
/// `f~ = chi f + (d_t chi) u - A grad u . grad chi - F . grad chi` and
/// `F~ = -A (u grad chi) + F chi`.
pub fn localize(
    u: &Field,
    chi: &Field,
    a: &CoefficientField,
    f: &Field,
    ff: &Field,
    omega: Option<&Region>,
) -> Result<Localized> {
    let g = *u.grid();
    for other in [chi.grid(), a.grid(), f.grid(), ff.grid()] {
        g.ensure_same(other)?;
    }
    if u.shape() != Shape::Scalar || f.shape() != Shape::Scalar || ff.shape() != Shape::Vector {
        return Err(Error::ShapeMismatch("localize needs scalar u, f and vector F".into()));
    }
    check_cutoff(chi)?;
    if let Some(omega) = omega {
        sample::check_support(chi, omega)?;
    }
    let m = g.m();
    let n = g.n();
    let d = m * n;
    let chi_re: Vec<f64> = chi.data().iter().map(|z| z.re).collect();
    let dt_chi = fracops::time_derivative(chi);
    let grad_chi = fracops::gradient_data(&g, 1, chi.data());
    let agu = a.apply(&fracops::gradient_x(u)?)?;

    let mut ft = vec![Complex64::new(0.0, 0.0); g.points() * m];
    let mut ugc = vec![Complex64::new(0.0, 0.0); g.points() * d];
    let mut ffchi = vec![Complex64::new(0.0, 0.0); g.points() * d];
    for p in 0..g.points() {
        let gc = &grad_chi[p * n..(p + 1) * n];
        for al in 0..m {
            let q = p * m + al;
            let mut s = chi_re[p] * f.data()[q] + dt_chi.data()[p] * u.data()[q];
            for i in 0..n {
                let r = p * d + al * n + i;
                s -= (agu.data()[r] + ff.data()[r]) * gc[i];
                ugc[r] = u.data()[q] * gc[i];
                ffchi[r] = ff.data()[r] * chi_re[p];
            }
            ft[q] = s;
        }
    }
    let a_ugc = a.apply_data(&ugc);
    let fft_t: Vec<Complex64> = ffchi.iter().zip(&a_ugc).map(|(x, y)| x - y).collect();
    let v = u.mul_pointwise(chi)?;
    let f_t = Field::from_vec(g, Shape::Scalar, ft)?;
    let ff_t = Field::from_vec(g, Shape::Vector, fft_t)?;

    let lv = {
        let flux = a.apply(&fracops::gradient_x(&v)?)?;
        fracops::time_derivative(&v).sub(&fracops::divergence_x(&flux)?)?
    };
    let defect = lv.sub(&f_t)?.sub(&fracops::divergence_x(&ff_t)?)?;
    Ok(Localized { v, f: f_t, ff: ff_t, defect })
}

/// Largest Fourier coefficient of the defect relative to the largest one of
/// `f~ + div F~`.
pub fn relative_defect(loc: &Localized) -> f64 {
    let g = *loc.v.grid();
    let peak = |field: &Field| {
        let mut h = field.data().to_vec();
        fft::transform(&g, field.comps(), &mut h, Axes::All, true);
        h.iter().map(|z| z.norm()).fold(0.0, f64::max)
    };
    let data = loc.f.add(&fracops::divergence_x(&loc.ff).expect("vector")).expect("grid");
    let scale = peak(&data);
    let d = peak(&loc.defect);
    if scale == 0.0 {
        d
    } else {
        d / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientKind, CoefficientParams};
    use crate::grid::{Cube, Grid, TimeInterval};
    use crate::rng::stream;
    use crate::sample::{BandLimited, Cutoff};
    use crate::solver::{residual_probe, solve, RightHandSide, SolverOptions};

    fn identity(g: Grid) -> CoefficientField {
        CoefficientField::generate(g, CoefficientKind::Constant, &CoefficientParams::default(), 0)
            .unwrap()
    }

    fn bump() -> Cutoff {
        Cutoff {
            center_t: 0.5,
            center_x: [0.5, 0.5],
            half_t: 0.2,
            half_x: 0.2,
            width_t: 0.04,
            width_x: 0.04,
        }
    }

    #[test]
    fn unit_cutoff_is_identity() {
        let g = Grid::new(1, 1, 16, 16, 1.0, 1.0).unwrap();
        let mut r = stream(4, "loc");
        let band = BandLimited::new(3, 3);
        let u = band.sample(&g, Shape::Scalar, &mut r).unwrap();
        let f = band.sample(&g, Shape::Scalar, &mut r).unwrap();
        let ff = band.sample(&g, Shape::Vector, &mut r).unwrap();
        let one = Field::constant(g, Shape::Density, Complex64::new(1.0, 0.0));
        let loc = localize(&u, &one, &identity(g), &f, &ff, None).unwrap();
        assert!(loc.v.sub(&u).unwrap().max_abs() < 1e-14);
        assert!(loc.f.sub(&f).unwrap().max_abs() < 1e-12);
        assert!(loc.ff.sub(&ff).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn zero_solution_substitution() {
        let g = Grid::new(1, 1, 32, 32, 1.0, 1.0).unwrap();
        let mut r = stream(5, "loc");
        let band = BandLimited::new(3, 3);
        let f = band.sample(&g, Shape::Scalar, &mut r).unwrap();
        let ff = band.sample(&g, Shape::Vector, &mut r).unwrap();
        let chi = bump().field(&g);
        let u = Field::zeros(g, Shape::Scalar);
        let loc = localize(&u, &chi, &identity(g), &f, &ff, None).unwrap();
        let gc = fracops::gradient_x(&chi.clone().with_shape(Shape::Scalar).unwrap()).unwrap();
        let want_f = Field::from_vec(
            g,
            Shape::Scalar,
            (0..g.points())
                .map(|p| chi.data()[p].re * f.data()[p] - ff.data()[p] * gc.data()[p])
                .collect(),
        )
        .unwrap();
        assert!(loc.v.max_abs() == 0.0);
        assert!(loc.f.sub(&want_f).unwrap().max_abs() < 1e-12);
        assert!(loc.ff.sub(&ff.mul_pointwise(&chi).unwrap()).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn heat_solution_localizes() {
        let g = Grid::new(1, 1, 64, 64, 1.0, 1.0).unwrap();
        let a = identity(g);
        let f0 = BandLimited::new(3, 3).sample(&g, Shape::Scalar, &mut stream(6, "f")).unwrap();
        let rhs = RightHandSide::new(f0.clone(), Field::zeros(g, Shape::Vector)).unwrap();
        let (u, _) = solve(&a, 0.0, &rhs, &SolverOptions::with_tol(1e-12)).unwrap();
        let u = u.into_field();
        let f = f0.sub(&u).unwrap();
        let ff = Field::zeros(g, Shape::Vector);
        let chi = bump().field(&g);
        let omega =
            Region::new(TimeInterval::new(0.08, 0.84).unwrap(), Cube::new(&[0.5], 0.42).unwrap());
        let loc = localize(&u, &chi, &a, &f, &ff, Some(&omega)).unwrap();
        let band = BandLimited::new(6, 6);
        let res = residual_probe(&loc.v, &a, 0.0, &loc.f, &loc.ff, 20, &band, 7).unwrap();
        assert!(res <= 1e-8, "{res:e}");
    }

    #[test]
    fn support_and_range_errors() {
        let g = Grid::new(1, 1, 32, 32, 1.0, 1.0).unwrap();
        let z = Field::zeros(g, Shape::Scalar);
        let zv = Field::zeros(g, Shape::Vector);
        let chi = bump().field(&g);
        let small =
            Region::new(TimeInterval::new(0.4, 0.2).unwrap(), Cube::new(&[0.5], 0.1).unwrap());
        assert!(matches!(
            localize(&z, &chi, &identity(g), &z, &zv, Some(&small)),
            Err(Error::SupportCheck(_))
        ));
        let big = chi.scale_real(2.0);
        assert!(matches!(
            localize(&z, &big, &identity(g), &z, &zv, None),
            Err(Error::InvalidParameter(_))
        ));
    }
}
