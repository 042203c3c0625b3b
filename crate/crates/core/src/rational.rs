//! Exact rational scalars and their text encoding.
//!
//! Every coefficient, measure, tolerance and LP datum in the crate is a
//! [`Q`]. Text files use `p/q` (or a bare integer when `q = 1`).

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ParseError;

/// Exact rational number.
pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `p/q`, an integer, or a finite decimal such as `0.25`.
pub fn parse_q(s: &str) -> Result<Q, ParseError> {
    let s = s.trim();
    let bad = || ParseError::new(format!("invalid rational `{s}`"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, d)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(p, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" || int == "+" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac_part: BigInt = frac.parse().map_err(|_| bad())?;
        let frac_q = Q::new(frac_part, scale);
        let int_q = Q::from_integer(int_part);
        return Ok(if neg { int_q - frac_q } else { int_q + frac_q });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(n))
}

/// Canonical text form: `p/q` in lowest terms, or `p` when integral.
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Integer square root floor for nonnegative integers.
fn isqrt(n: &BigInt) -> BigInt {
    n.sqrt()
}

/// Exact test `sqrt(a) <= b` for rationals `a >= 0`.
pub fn sqrt_le(a: &Q, b: &Q) -> bool {
    if b.is_negative() {
        return false;
    }
    a <= &(b * b)
}

/// Exact test `sqrt(a) < b` for rationals `a >= 0`.
pub fn sqrt_lt(a: &Q, b: &Q) -> bool {
    if !b.is_positive() {
        return false;
    }
    a < &(b * b)
}

/// `sqrt(x)` when it is rational.
pub fn exact_sqrt(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let (n, d) = (x.numer(), x.denom());
    let (rn, rd) = (isqrt(n), isqrt(d));
    (&rn * &rn == *n && &rd * &rd == *d).then(|| Q::new(rn, rd))
}

/// A rational upper bound on `sqrt(x)` accurate to about `1/2^bits`; exact
/// when the root is rational.
pub fn sqrt_upper(x: &Q, bits: u32) -> Q {
    if let Some(r) = exact_sqrt(x) {
        return r;
    }
    let scale = BigInt::one() << (2 * bits as usize);
    // floor(sqrt(x * 4^bits)) + 1, divided by 2^bits.
    let scaled = (x * Q::from_integer(scale)).ceil().to_integer();
    let root = isqrt(&scaled) + BigInt::one();
    Q::new(root, BigInt::one() << bits as usize)
}

/// Best rational approximation of `v` with denominator at most `max_den`,
/// accepted only when within `tol` (absolute) of `v`.
pub fn rationalize(v: f64, max_den: i64, tol: f64) -> Option<Q> {
    if !v.is_finite() {
        return None;
    }
    if v.abs() < tol {
        return Some(Q::zero());
    }
    let neg = v < 0.0;
    let x = v.abs();
    // Continued-fraction convergents.
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    let mut best: Option<(i128, i128)> = None;
    for _ in 0..64 {
        let a = r.floor();
        if a > 1e15 {
            break;
        }
        let a_i = a as i128;
        let h2 = a_i * h1 + h0;
        let k2 = a_i * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        best = Some((h2, k2));
        if ((h2 as f64) / (k2 as f64) - x).abs() <= tol * x.max(1.0) {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = r - a;
        if frac < 1e-18 {
            break;
        }
        r = 1.0 / frac;
    }
    let (h, k) = best?;
    let approx = h as f64 / k as f64;
    if (approx - x).abs() > tol * x.max(1.0) {
        return None;
    }
    let qv = Q::new(BigInt::from(h), BigInt::from(k));
    Some(if neg { -qv } else { qv })
}

/// Least common multiple of the denominators of a set of rationals.
pub fn common_denominator<'a>(xs: impl IntoIterator<Item = &'a Q>) -> BigInt {
    xs.into_iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}
