//! Exact scalars: big rationals and Gaussian rationals.

use num::bigint::BigInt;
use num::{BigRational, Complex, One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Result};

pub type Rational = BigRational;

/// A Gaussian rational `re + i·im`, both parts exact.
pub type Scalar = Complex<Rational>;

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn integer(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `num / 2^exp`.
pub fn dyadic(num: i64, exp: u32) -> Rational {
    Rational::new(BigInt::from(num), BigInt::one() << exp)
}

/// `2^e` for any signed exponent.
pub fn pow2(e: i64) -> Rational {
    if e >= 0 {
        Rational::from_integer(BigInt::one() << e as usize)
    } else {
        Rational::new(BigInt::one(), BigInt::one() << (-e) as usize)
    }
}

pub fn real(r: Rational) -> Scalar {
    Complex::new(r, Rational::zero())
}

pub fn complex(re: Rational, im: Rational) -> Scalar {
    Complex::new(re, im)
}

pub fn zero() -> Scalar {
    Complex::new(Rational::zero(), Rational::zero())
}

pub fn one() -> Scalar {
    real(Rational::one())
}

pub fn modulus_sq(z: &Scalar) -> Rational {
    &z.re * &z.re + &z.im * &z.im
}

/// Strict test `Re z > 0`, decided exactly.
pub fn re_positive(z: &Scalar) -> bool {
    z.re.is_positive()
}

pub fn is_zero(z: &Scalar) -> bool {
    z.re.is_zero() && z.im.is_zero()
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(if r.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

pub fn to_f64_pair(z: &Scalar) -> (f64, f64) {
    (rational_to_f64(&z.re), rational_to_f64(&z.im))
}

pub fn abs_f64(z: &Scalar) -> f64 {
    let (re, im) = to_f64_pair(z);
    re.hypot(im)
}

/// Exact integer power; negative exponents invert. Fails on `0^(-n)`.
pub fn powi(z: &Scalar, exp: i64) -> Result<Scalar> {
    let mut base = if exp < 0 {
        if is_zero(z) {
            return Err(invalid("zero has no negative powers"));
        }
        let m = modulus_sq(z);
        complex(&z.re / &m, -&z.im / &m)
    } else {
        z.clone()
    };
    let mut e = exp.unsigned_abs();
    let mut acc = one();
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    Ok(acc)
}

/// Parses `"3"`, `"-5/2"`, `"1/2+3/4i"`, `"2i"` style literals.
pub fn parse_scalar(text: &str) -> Result<Scalar> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(invalid("empty scalar literal"));
    }
    if let Some(body) = s.strip_suffix('i') {
        // split at the last sign that is not the leading one
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .map(|(i, _)| i)
            .last();
        let (re, im) = match split {
            Some(i) => (parse_rational(&body[..i])?, parse_imag(&body[i..])?),
            None => (Rational::zero(), parse_imag(body)?),
        };
        Ok(complex(re, im))
    } else {
        Ok(real(parse_rational(&s)?))
    }
}

fn parse_imag(s: &str) -> Result<Rational> {
    match s {
        "" | "+" => Ok(Rational::one()),
        "-" => Ok(-Rational::one()),
        _ => parse_rational(s),
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.strip_prefix('+').unwrap_or(s);
    let bad = || invalid(format!("not a rational literal: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.parse().map_err(|_| bad())?;
            let d: BigInt = d.parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn format_scalar(z: &Scalar) -> String {
    if z.im.is_zero() {
        z.re.to_string()
    } else if z.re.is_zero() {
        format!("{}i", z.im)
    } else if z.im.is_negative() {
        format!("{}-{}i", z.re, -&z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_literals() {
        assert_eq!(parse_scalar("2").unwrap(), real(integer(2)));
        assert_eq!(parse_scalar("-3/4").unwrap(), real(rational(-3, 4)));
        assert_eq!(parse_scalar("1/2+3i").unwrap(), complex(rational(1, 2), integer(3)));
        assert_eq!(parse_scalar("1-i").unwrap(), complex(integer(1), integer(-1)));
        assert_eq!(parse_scalar("-2i").unwrap(), complex(integer(0), integer(-2)));
        assert!(parse_scalar("1/0").is_err());
        assert!(parse_scalar("").is_err());
        assert!(parse_scalar("abc").is_err());
    }

    #[test]
    fn powers_are_exact() {
        let two = real(integer(2));
        assert_eq!(powi(&two, 10).unwrap(), real(integer(1024)));
        assert_eq!(powi(&two, -3).unwrap(), real(rational(1, 8)));
        let i = complex(integer(0), integer(1));
        assert_eq!(powi(&i, 2).unwrap(), real(integer(-1)));
        assert_eq!(powi(&i, -1).unwrap(), complex(integer(0), integer(-1)));
        assert!(powi(&zero(), -1).is_err());
        assert_eq!(pow2(-2), rational(1, 4));
    }

    #[test]
    fn tiny_values_convert_to_zero_not_nan() {
        let tiny = pow2(-5000);
        assert_eq!(rational_to_f64(&tiny), 0.0);
    }

    #[test]
    fn formatting_round_trips() {
        for lit in ["2", "-3/4", "1/2+3i", "1-1i", "5i"] {
            let z = parse_scalar(lit).unwrap();
            assert_eq!(parse_scalar(&format_scalar(&z)).unwrap(), z);
        }
    }
}
