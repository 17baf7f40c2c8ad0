//! Exact rational helpers on top of `num_rational::Ratio<i64>`.

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::Ratio<i64>;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

pub fn frac(p: i64, q: i64) -> Rational {
    Rational::new(p, q)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(*r.numer() as f64 / *r.denom() as f64)
}

/// Parses `"p/q"`, `"p"` or a plain decimal like `"0.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in `{s}`")))?;
        let q: i64 = q
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in `{s}`")))?;
        if q == 0 {
            return Err(Error::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(Rational::new(p, q));
    }
    if let Ok(n) = s.parse::<i64>() {
        return Ok(int(n));
    }
    // finite decimal expansion, parsed digit by digit so "0.3" is exactly 3/10
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (whole, fracpart) = body
        .split_once('.')
        .ok_or_else(|| Error::Parse(format!("not a rational: `{s}`")))?;
    if fracpart.len() > 15 || !fracpart.chars().all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(format!("not a rational: `{s}`")));
    }
    let whole: i64 = if whole.is_empty() {
        0
    } else {
        whole
            .parse()
            .map_err(|_| Error::Parse(format!("not a rational: `{s}`")))?
    };
    let den = 10i64.pow(fracpart.len() as u32);
    let num: i64 = if fracpart.is_empty() {
        0
    } else {
        fracpart.parse().unwrap()
    };
    let r = Rational::new(whole * den + num, den);
    Ok(if neg { -r } else { r })
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Best rational approximation of `x` with denominator at most `max_den`
/// (continued-fraction convergents and semiconvergents).
pub fn approximate(x: f64, max_den: i64) -> Rational {
    let floor = x.floor();
    let base = floor as i64;
    let mut y = x - floor;
    // (p0/q0, p1/q1) are consecutive convergents of y, starting from 1/0, 0/1
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, 0i64, 1i64);
    loop {
        if y < 1e-15 {
            break;
        }
        let inv = 1.0 / y;
        let a = inv.floor() as i64;
        let p2 = a.saturating_mul(p1).saturating_add(p0);
        let q2 = a.saturating_mul(q1).saturating_add(q0);
        if q2 > max_den || q2 <= 0 {
            // best semiconvergent against the last convergent
            let k = (max_den - q0) / q1;
            let cand_a = Rational::new(p1, q1);
            if k <= 0 {
                return cand_a + int(base);
            }
            let cand_b = Rational::new(k * p1 + p0, k * q1 + q0);
            let ea = (to_f64(&cand_a) - (x - floor)).abs();
            let eb = (to_f64(&cand_b) - (x - floor)).abs();
            return if eb < ea { cand_b } else { cand_a } + int(base);
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        y = inv - a as f64;
    }
    Rational::new(p1, q1) + int(base)
}

/// Fractional part in `[0, 1)`.
pub fn frac_part(r: &Rational) -> Rational {
    r - r.floor()
}

/// Distance to the nearest integer, ‖r‖.
pub fn dist_to_int(r: &Rational) -> Rational {
    let f = frac_part(r);
    let g = Rational::one() - f;
    if f < g {
        f
    } else {
        g
    }
}

pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> i64 {
    values.into_iter().fold(1i64, |acc, r| acc.lcm(r.denom()))
}

pub fn is_nonnegative(r: &Rational) -> bool {
    !r.is_negative()
}

pub fn is_zero(r: &Rational) -> bool {
    r.is_zero()
}

/// `e^{-2πi·r}` evaluated after exact reduction of `r` modulo 1.
pub fn unit_phase(r: &Rational) -> num_complex::Complex64 {
    let f = frac_part(r);
    let angle = -2.0 * std::f64::consts::PI * to_f64(&f);
    num_complex::Complex64::new(angle.cos(), angle.sin())
}

/// Serializes rationals in their `p/q` text form.
pub fn serialize_rationals<S: serde::Serializer>(
    v: &[Rational],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(format_rational))
}
