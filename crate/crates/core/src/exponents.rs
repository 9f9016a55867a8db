//! Exact exponent arithmetic: parabolic Sobolev conjugates, the Gehring
//! exponent configuration and the time-Hölder exponent.

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

fn q(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

/// Parses integers, plain decimals such as `"2.05"` and fractions such as `"6/5"` exactly.
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidExponent(format!("cannot parse exponent {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let a: i128 = a.trim().parse().map_err(|_| bad())?;
        let b: i128 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(q(a, b));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
        || frac.len() > 30
    {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num: i128 = digits.parse().map_err(|_| bad())?;
    let den = 10i128.checked_pow(frac.len() as u32).ok_or_else(bad)?;
    let r = q(num, den);
    Ok(if neg { -r } else { r })
}

/// Exact rational with the shortest decimal expansion that round-trips to `x`.
pub fn from_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::InvalidExponent(format!("non-finite exponent {x}")));
    }
    let s = format!("{x}");
    if s.contains('e') {
        return Err(Error::InvalidExponent(format!("exponent {x} out of range")));
    }
    parse(&s)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `p^*` with `1/p^* = 1/p - 1/(n+2)`, for `1 <= p < n + 2`.
pub fn sobolev_upper(p: Rational, n: usize) -> Result<Rational> {
    let d = q(n as i128 + 2, 1);
    if p < Rational::one() || p >= d {
        return Err(Error::InvalidExponent(format!("p={p} outside [1, {d})")));
    }
    Ok(p * d / (d - p))
}

/// `p_*` with `1/p_* = 1/p + 1/(n+2)`, for `p >= 1`.
pub fn sobolev_lower(p: Rational, n: usize) -> Result<Rational> {
    if p < Rational::one() {
        return Err(Error::InvalidExponent(format!("p={p} below 1")));
    }
    let d = q(n as i128 + 2, 1);
    Ok(p * d / (d + p))
}

/// `2^* = 2(n+2)/n`.
pub fn two_upper(n: usize) -> Rational {
    sobolev_upper(q(2, 1), n).expect("2 < n + 2")
}

/// `2_* = 2(n+2)/(n+4)`.
pub fn two_lower(n: usize) -> Rational {
    sobolev_lower(q(2, 1), n).expect("2 >= 1")
}

/// Time-Hölder exponent `1/2 - 1/p`.
pub fn holder_alpha(p: Rational) -> Result<Rational> {
    if p <= q(2, 1) {
        return Err(Error::InvalidExponent(format!("p={p} must exceed 2")));
    }
    Ok((p - q(2, 1)) / (q(2, 1) * p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExponentConfig {
    pub s: Rational,
    pub p: Rational,
    pub n: usize,
    pub alpha: Rational,
    pub beta: Rational,
    pub q_alpha: Rational,
    pub q_beta: Rational,
}

impl ExponentConfig {
    /// Checks `2 alpha + beta = s` and `1/q_a - alpha = s/p = 1/q_b - beta/n` exactly,
    /// together with `q_a, q_b > 1` and `alpha, beta >= 0`.
    pub fn validate(&self) -> Result<()> {
        let n = q(self.n as i128, 1);
        let sp = self.s / self.p;
        let ok = self.alpha * 2 + self.beta == self.s
            && self.q_alpha.recip() - self.alpha == sp
            && self.q_beta.recip() - self.beta / n == sp
            && self.q_alpha > Rational::one()
            && self.q_beta > Rational::one()
            && !self.alpha.is_negative()
            && !self.beta.is_negative();
        if ok {
            Ok(())
        } else {
            Err(Error::InfeasibleExponents(format!("{self:?}")))
        }
    }
}

/// `q_a = q_b = p(n+2) / (s(p+n+2))`, `alpha = 1/q - s/p`, `beta = n alpha`.
pub fn solve_exponents(s: Rational, p: Rational, n: usize) -> Result<ExponentConfig> {
    if n == 0 {
        return Err(Error::InvalidExponent("n must be positive".into()));
    }
    let d = q(n as i128 + 2, 1);
    if s <= Rational::one() || s >= d {
        return Err(Error::InvalidExponent(format!("s={s} outside (1, {d})")));
    }
    if p <= Rational::zero() {
        return Err(Error::InvalidExponent(format!("p={p} not positive")));
    }
    let qq = p * d / (s * (p + d));
    let alpha = qq.recip() - s / p;
    let beta = alpha * q(n as i128, 1);
    if qq <= Rational::one() || alpha.is_negative() {
        return Err(Error::InfeasibleExponents(format!(
            "s={s}, p={p}, n={n} gives q={qq}, alpha={alpha}"
        )));
    }
    let cfg = ExponentConfig { s, p, n, alpha, beta, q_alpha: qq, q_beta: qq };
    cfg.validate()?;
    Ok(cfg)
}
