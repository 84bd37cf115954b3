//! Numeric field abstraction shared by every table, bound and LP in the crate.
//!
//! Two representations are supported: exact rationals ([`Rational`]) for
//! hand-entered tables, vertices and certificates, and `f64` for values that
//! come out of Born-rule computations. Every generic operation preserves the
//! representation it was called with.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::LdlError;

pub type Rational = BigRational;

/// Default tolerance used by float-mode comparisons.
pub const FLOAT_TOL: f64 = 1e-9;

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
    + for<'a> std::ops::SubAssign<&'a Self>
    + for<'a> std::ops::MulAssign<&'a Self>
    + for<'a> std::ops::DivAssign<&'a Self>
{
    /// True for exact arithmetic.
    const EXACT: bool;

    fn from_rational(r: &Rational) -> Self;

    /// Lossless for rationals, exact binary expansion for floats.
    fn to_rational(&self) -> Rational;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Numeric zero threshold used inside the simplex.
    fn pivot_eps() -> Self;

    fn is_finite_value(&self) -> bool;

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn to_rational(&self) -> Rational {
        BigRational::from_float(*self).unwrap_or_else(Rational::zero)
    }

    fn pivot_eps() -> Self {
        1e-12
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }

    fn pivot_eps() -> Self {
        Rational::zero()
    }

    fn is_finite_value(&self) -> bool {
        true
    }
}

/// Converts a rational to the nearest-ish `f64` without overflowing on huge
/// numerators and denominators.
/// Nearest `f64` to `r` (ties to even).
pub fn rational_to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let neg = r.is_negative();
    let n: BigInt = r.numer().abs();
    let d = r.denom().clone();
    // Quotient with 54 or 55 significant bits, plus a sticky remainder bit.
    let k = 54 - (n.bits() as i64 - d.bits() as i64);
    let (num, den) = if k >= 0 { (n << k as usize, d) } else { (n, d << (-k) as usize) };
    let q: BigInt = &num / &den;
    let sticky = !(&num % &den).is_zero();
    let extra = q.bits() as usize - 53;
    let mut mant = (&q >> extra).to_u64().expect("53 bits");
    let mask: BigInt = (BigInt::one() << extra) - 1;
    let low = (&q & mask).to_u64().expect("small");
    let half = 1u64 << (extra - 1);
    if low > half || (low == half && (sticky || mant & 1 == 1)) {
        mant += 1;
    }
    let exp = extra as i64 - k;
    // Two steps keep intermediate powers of two in range.
    let e1 = (exp / 2) as i32;
    let e2 = (exp - exp / 2) as i32;
    let v = mant as f64 * 2f64.powi(e1) * 2f64.powi(e2);
    if neg {
        -v
    } else {
        v
    }
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn to_scalar<T: Scalar>(n: i64, d: i64) -> T {
    T::from_rational(&ratio(n, d))
}

/// Parses `"p/q"`, a decimal string such as `"0.125"` or `"1e-3"`, or an
/// integer into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, LdlError> {
    let s = s.trim();
    let bad = || LdlError::Parse(format!("not a probability literal: {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Canonical text form: `"p/q"`, or a bare integer when the denominator is 1.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Best rational approximation with denominator at most `max_den`
/// (continued-fraction convergents and semiconvergents).
pub fn rationalize(x: f64, max_den: u64) -> Rational {
    if !x.is_finite() {
        return Rational::zero();
    }
    let neg = x < 0.0;
    let exact = BigRational::from_float(x.abs()).unwrap_or_else(Rational::zero);
    let max_den = BigInt::from(max_den.max(1));
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let mut rem = exact.clone();
    loop {
        let a = rem.floor().to_integer();
        let q2 = &q0 + &a * &q1;
        if q2 > max_den {
            // largest admissible semiconvergent
            let k = (&max_den - &q0) / &q1;
            let cand_p = &p0 + &k * &p1;
            let cand_q = &q0 + &k * &q1;
            let semi = Rational::new(cand_p, cand_q);
            let conv = Rational::new(p1.clone(), q1.clone());
            let best = if (&semi - &exact).abs() < (&conv - &exact).abs() { semi } else { conv };
            return if neg { -best } else { best };
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let frac = &rem - Rational::from_integer(a);
        if frac.is_zero() {
            let r = Rational::new(p1, q1);
            return if neg { -r } else { r };
        }
        rem = frac.recip();
    }
}
