//! Restarted complex GMRES with modified Gram-Schmidt and Givens rotations.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    pub restarts: usize,
    /// `||b - K x|| / ||b||` after every inner iteration.
    pub history: Vec<f64>,
    pub converged: bool,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solves `K x = b` from `x = 0` until the relative residual drops below `rtol`.
pub fn gmres(
    apply: &mut dyn FnMut(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    rtol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome {
    let len = b.len();
    let bnorm = norm(b);
    let mut x = vec![ZERO; len];
    let mut history = Vec::new();
    if bnorm == 0.0 {
        return GmresOutcome { x, iterations: 0, restarts: 0, history, converged: true };
    }
    let restart = restart.max(1);
    let mut iterations = 0;
    let mut restarts = 0;
    loop {
        let kx = apply(&x);
        let r: Vec<Complex64> = b.iter().zip(&kx).map(|(a, c)| a - c).collect();
        let beta = norm(&r);
        if beta / bnorm <= rtol {
            return GmresOutcome { x, iterations, restarts, history, converged: true };
        }
        if iterations >= max_iter {
            return GmresOutcome { x, iterations, restarts, history, converged: false };
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut h: Vec<Vec<Complex64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<Complex64> = Vec::new();
        let mut g = vec![Complex64::new(beta, 0.0)];
        let mut k = 0;
        while k < restart && iterations < max_iter {
            let mut w = apply(&basis[k]);
            let mut col = vec![ZERO; k + 2];
            for (j, q) in basis.iter().enumerate() {
                let hj = dot(q, &w);
                col[j] = hj;
                w.iter_mut().zip(q).for_each(|(a, c)| *a -= hj * c);
            }
            let wn = norm(&w);
            col[k + 1] = Complex64::new(wn, 0.0);
            for j in 0..k {
                let t = cs[j] * col[j] + sn[j] * col[j + 1];
                col[j + 1] = -sn[j].conj() * col[j] + cs[j] * col[j + 1];
                col[j] = t;
            }
            let (a, bb) = (col[k], col[k + 1]);
            let (c, s) = if a.norm() == 0.0 {
                (0.0, Complex64::new(1.0, 0.0))
            } else {
                let t = (a.norm_sqr() + bb.norm_sqr()).sqrt();
                (a.norm() / t, (a / a.norm()) * bb.conj() / t)
            };
            col[k] = c * a + s * bb;
            col[k + 1] = ZERO;
            cs.push(c);
            sn.push(s);
            let gk = g[k];
            g.push(-s.conj() * gk);
            g[k] = c * gk;
            h.push(col);
            iterations += 1;
            k += 1;
            let rel = g[k].norm() / bnorm;
            history.push(rel);
            if rel <= rtol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|z| z / wn).collect());
        }
        let mut y = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&basis[j]).for_each(|(a, q)| *a += yj * q);
        }
        restarts += 1;
    }
}
