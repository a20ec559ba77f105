//! Exact rational helpers shared by the whole crate.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion
        let shift = x.denom().bits().max(x.numer().bits()) as i64 - 60;
        if shift <= 0 {
            return f64::NAN;
        }
        let n = x.numer() >> (shift as usize);
        let d = x.denom() >> (shift as usize);
        n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
    })
}

/// Exact rational value of a finite float.
pub fn from_f64(x: f64) -> Q {
    Q::from_float(x).expect("finite float")
}

/// Parses `p/q`, an integer, or a plain decimal such as `0.6586` or `-1.5e-3`.
pub fn parse_q(s: &str) -> Result<Q, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty number".into());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let d: BigInt = d.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(Q::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(p) => (&s[..p], s[p + 1..].parse::<i32>().map_err(|_| format!("bad exponent in {s:?}"))?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("bad number {s:?}"));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(format!("bad number {s:?}"));
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().unwrap() };
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut v = Q::from_integer(n);
    if scale >= 0 {
        v *= Q::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        v /= Q::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -v } else { v })
}

/// Formats as `p/q` (or `p` when integral).
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn clamp01(x: &Q) -> Q {
    if x.is_negative() {
        Q::zero()
    } else if *x > Q::one() {
        Q::one()
    } else {
        x.clone()
    }
}

pub fn is_01(x: &Q) -> bool {
    x.is_zero() || x.is_one()
}

pub fn ceil_q(x: &Q) -> BigInt {
    x.ceil().to_integer()
}

pub fn floor_q(x: &Q) -> BigInt {
    x.floor().to_integer()
}


/// Ordered field used by the parameter algebra. Exact types compare exactly;
/// `f64` uses an absolute tolerance of `1e-9`.
pub trait Scalar: Clone + PartialOrd + Num + Signed + std::fmt::Debug + Send + Sync {
    fn from_i64(v: i64) -> Self;
    fn as_f64(&self) -> f64;
    fn near_zero(&self) -> bool;
    fn nonneg(&self) -> bool;
}

impl Scalar for Q {
    fn from_i64(v: i64) -> Self {
        qi(v)
    }
    fn as_f64(&self) -> f64 {
        to_f64(self)
    }
    fn near_zero(&self) -> bool {
        self.is_zero()
    }
    fn nonneg(&self) -> bool {
        !self.is_negative()
    }
}

/// Small exact rationals for dense grids.
pub type R = Ratio<i128>;

impl Scalar for R {
    fn from_i64(v: i64) -> Self {
        R::from_integer(v as i128)
    }
    fn as_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
    fn near_zero(&self) -> bool {
        self.is_zero()
    }
    fn nonneg(&self) -> bool {
        !self.is_negative()
    }
}

pub const F64_TOL: f64 = 1e-9;

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn near_zero(&self) -> bool {
        self.abs() <= F64_TOL
    }
    fn nonneg(&self) -> bool {
        *self >= -F64_TOL
    }
}

pub fn s_clamp01<T: Scalar>(x: T) -> T {
    if x < T::zero() {
        T::zero()
    } else if x > T::one() {
        T::one()
    } else {
        x
    }
}

pub fn r_to_q(x: &R) -> Q {
    Q::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))
}

/// Exact conversion when the value fits, `None` otherwise.
pub fn q_to_r(x: &Q) -> Option<R> {
    Some(R::new(x.numer().to_i128()?, x.denom().to_i128()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_forms() {
        assert_eq!(parse_q("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_q("0.6586").unwrap(), q(6586, 10000));
        assert_eq!(parse_q("-2").unwrap(), qi(-2));
        assert_eq!(parse_q("1e-3").unwrap(), q(1, 1000));
        assert_eq!(parse_q(".5").unwrap(), q(1, 2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
    }

    #[test]
    fn f64_roundtrip_is_exact() {
        let x = 0.1f64;
        assert_eq!(to_f64(&from_f64(x)), x);
    }
}
