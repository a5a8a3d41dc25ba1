//! Exact rational helpers: parsing, JSON form, and powers of two with
//! rational exponents.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serializer;

use crate::error::{Error, Result};

/// A rational exponent such as `3/2` for `2^{3/2}`.
pub type Exponent = Ratio<i64>;

/// Binary digits kept when `2^x` is irrational.
pub const DYADIC_BITS: u32 = 32;

/// Parses `p`, `p/q` or a finite decimal like `1.25`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidParams(format!("not a rational number: {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        let scale = num_traits::pow(BigInt::from(10u32), frac.len());
        let frac: BigInt = frac.parse().map_err(|_| bad())?;
        let mag = int.abs() * &scale + frac;
        let num = if negative { -mag } else { mag };
        return Ok(BigRational::new(num, scale));
    }
    let v: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(v))
}

pub fn parse_exponent(s: &str) -> Result<Exponent> {
    let r = parse_rational(s)?;
    match (r.numer().to_i64(), r.denom().to_i64()) {
        (Some(p), Some(q)) => Ok(Exponent::new(p, q)),
        _ => Err(Error::InvalidParams(format!("exponent {s:?} out of range"))),
    }
}

pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn serialize_rational<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

pub fn serialize_rationals<S: Serializer>(
    rs: &[BigRational],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(rs.len()))?;
    for r in rs {
        seq.serialize_element(&format_rational(r))?;
    }
    seq.end()
}

pub fn serialize_opt_rational<S: Serializer>(
    r: &Option<BigRational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&format_rational(r)),
        None => s.serialize_none(),
    }
}

pub fn ratio_u64(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `log2` of a positive rational, accurate even when numerator and
/// denominator overflow `f64`.
pub fn log2(r: &BigRational) -> f64 {
    fn big_log2(v: &BigInt) -> f64 {
        let bits = v.bits();
        if bits <= 1000 {
            v.to_f64().map(f64::log2).unwrap_or(f64::NAN)
        } else {
            let shift = bits - 64;
            (v >> shift).to_f64().unwrap().log2() + shift as f64
        }
    }
    big_log2(r.numer()) - big_log2(r.denom())
}

fn pow2(e: u64) -> BigUint {
    BigUint::one() << e
}

/// Smallest integer `K` with `K >= 2^x`, for `x >= 0`.
pub fn ceil_pow2(x: &Exponent) -> Result<u64> {
    if x.is_negative() {
        return Err(Error::InvalidParams(format!("negative exponent {x}")));
    }
    let (p, q) = (*x.numer() as u64, *x.denom() as u32);
    // K^q >= 2^p  <=>  K >= 2^{p/q}
    let target = pow2(p);
    let root = target.nth_root(q);
    let k = if root.pow(q) == target { root } else { root + 1u32 };
    k.to_u64()
        .ok_or_else(|| Error::InvalidParams(format!("2^{x} does not fit in 64 bits")))
}

/// `2^x` as an exact rational. Integer exponents are exact; otherwise the
/// value is rounded to a multiple of `2^-DYADIC_BITS`, upward when `round_up`.
pub fn pow2_rational(x: &Exponent, round_up: bool) -> BigRational {
    let (p, q) = (*x.numer(), *x.denom());
    if q == 1 {
        return if p >= 0 {
            BigRational::from_integer(BigInt::from(pow2(p as u64)))
        } else {
            BigRational::new(BigInt::one(), BigInt::from(pow2((-p) as u64)))
        };
    }
    // 2^{p/q} * 2^F = (2^{p + F q})^{1/q}
    let e = p + DYADIC_BITS as i64 * q;
    assert!(e >= 0, "exponent {x} below dyadic resolution");
    let target = pow2(e as u64);
    let root = target.nth_root(q as u32);
    let scaled = if round_up && root.pow(q as u32) != target {
        root + 1u32
    } else {
        root
    };
    BigRational::new(
        BigInt::from(scaled),
        BigInt::from(pow2(DYADIC_BITS as u64)),
    )
}

/// `⌈r⌉` for a nonnegative rational.
pub fn ceil_u64(r: &BigRational) -> u64 {
    let (q, rem) = r.numer().div_rem(r.denom());
    let q = if rem.is_zero() { q } else { q + 1 };
    q.to_u64().unwrap_or(u64::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_forms() {
        assert_eq!(parse_rational("3/2").unwrap(), ratio_u64(3, 2));
        assert_eq!(parse_rational("1.25").unwrap(), ratio_u64(5, 4));
        assert_eq!(parse_rational("7").unwrap(), ratio_u64(7, 1));
        assert_eq!(parse_rational("-0.5").unwrap(), -ratio_u64(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn ceil_powers() {
        assert_eq!(ceil_pow2(&Exponent::from_integer(4)).unwrap(), 16);
        assert_eq!(ceil_pow2(&Exponent::from_integer(0)).unwrap(), 1);
        // 2^{1/2} = 1.414..
        assert_eq!(ceil_pow2(&Exponent::new(1, 2)).unwrap(), 2);
        // 2^{7/2} = 11.31..
        assert_eq!(ceil_pow2(&Exponent::new(7, 2)).unwrap(), 12);
    }

    #[test]
    fn dyadic_rounding_brackets_the_irrational_value() {
        let x = Exponent::new(1, 2);
        let lo = pow2_rational(&x, false);
        let hi = pow2_rational(&x, true);
        assert!(lo < hi);
        assert!(to_f64(&lo) <= std::f64::consts::SQRT_2);
        assert!(to_f64(&hi) >= std::f64::consts::SQRT_2);
        assert_eq!(pow2_rational(&Exponent::from_integer(-2), false), ratio_u64(1, 4));
    }

    #[test]
    fn ceil_of_rationals() {
        assert_eq!(ceil_u64(&ratio_u64(4, 3)), 2);
        assert_eq!(ceil_u64(&ratio_u64(4, 2)), 2);
        assert_eq!(ceil_u64(&ratio_u64(1, 8)), 1);
    }
}
