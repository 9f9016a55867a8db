use super::Field;
use crate::error::{Error, Result};

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(format!("norm exponent {p} not in [1, inf)")))
    }
}

/// `(sum |u|^p dt dx^n)^{1/p}`.
pub fn lp_norm(u: &Field, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let g = u.grid();
    let s: f64 = (0..g.points()).map(|q| u.magnitude_at(q).powf(p)).sum();
    Ok((s * g.cell_volume()).powf(1.0 / p))
}

/// `|| ||u(t, .)||_{L^{q_x}} ||_{L^{q_t}}`, spatial norm taken first.
pub fn mixed_norm(u: &Field, q_t: f64, q_x: f64) -> Result<f64> {
    check_exponent(q_t)?;
    check_exponent(q_x)?;
    let g = u.grid();
    let sp = g.spatial_points();
    let dvx = g.spatial_cell_volume();
    let s: f64 = (0..g.nt())
        .map(|it| {
            let inner: f64 = (0..sp).map(|j| u.magnitude_at(it * sp + j).powf(q_x)).sum();
            (inner * dvx).powf(q_t / q_x)
        })
        .sum();
    Ok((s * g.dt()).powf(1.0 / q_t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, Shape};
    use num_complex::Complex64;

    #[test]
    fn constant_norms() {
        let g = Grid::new(2, 1, 8, 8, 2.0, 3.0).unwrap();
        let u = Field::constant(g, Shape::Scalar, Complex64::new(0.0, 2.0));
        let vol: f64 = 2.0 * 9.0;
        assert!((lp_norm(&u, 3.0).unwrap() - 2.0 * vol.powf(1.0 / 3.0)).abs() < 1e-12);
        let expect = 2.0 * 9f64.powf(1.0 / 4.0) * 2f64.powf(1.0 / 1.5);
        assert!((mixed_norm(&u, 1.5, 4.0).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn mixed_equals_lp_on_diagonal() {
        let g = Grid::new(1, 2, 16, 16, 1.0, 1.0).unwrap();
        let u = Field::from_fn(g, Shape::Scalar, |t, x, c| {
            Complex64::new((t * 7.0 + x[0] * 3.0 + c as f64).sin(), t * x[0])
        });
        for p in [1.0, 2.0, 3.5] {
            let a = lp_norm(&u, p).unwrap();
            let b = mixed_norm(&u, p, p).unwrap();
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn rejects_small_exponent() {
        let g = Grid::new(1, 1, 4, 4, 1.0, 1.0).unwrap();
        let u = Field::zeros(g, Shape::Scalar);
        assert!(lp_norm(&u, 0.5).is_err());
        assert!(mixed_norm(&u, 2.0, f64::INFINITY).is_err());
    }
}
