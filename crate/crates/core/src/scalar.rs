//! Scalar abstraction shared by every computation.
//!
//! Exact mode runs on [`BigRational`]; float mode on `f64` (or `f32`). All
//! zero tests go through [`Scalar::is_negligible`], which is exact for
//! rationals and tolerance based for floats.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Largest denominator used when a float is pulled back to a rational.
pub const RATIONALIZE_MAX_DEN: i64 = 1_000_000;

/// Numeric type usable by the criteria, oracles and searches.
pub trait Scalar:
    Clone + Debug + Display + PartialEq + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// `true` when arithmetic is error free.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    /// `n / d`; panics on `d == 0`.
    fn from_ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Self::from_i64(n) / Self::from_i64(d)
    }

    fn from_rational(r: &BigRational) -> Self;

    /// Rationals use the best approximation with denominator at most
    /// [`RATIONALIZE_MAX_DEN`].
    fn from_f64_approx(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    /// Exact rational value (binary expansion for floats).
    fn to_rational(&self) -> BigRational;

    /// Conversion between scalar types through the rational value.
    fn cast<T: Scalar>(&self) -> T {
        T::from_rational(&self.to_rational())
    }

    /// Exact zero for rationals, `|self| <= tol` for floats.
    fn is_negligible(&self, tol: f64) -> bool;

    /// Square root when it is representable (always for floats, perfect
    /// squares only for rationals).
    fn sqrt_checked(&self) -> Option<Self>;

    /// Real cube root under the same representability rule.
    fn cbrt_checked(&self) -> Option<Self>;
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_i64(v: i64) -> Self {
                v as $t
            }

            fn from_rational(r: &BigRational) -> Self {
                ToPrimitive::to_f64(r).unwrap_or(f64::NAN) as $t
            }

            fn from_f64_approx(x: f64) -> Self {
                x as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn to_rational(&self) -> BigRational {
                BigRational::from_f64(*self as f64).unwrap_or_else(BigRational::zero)
            }

            fn is_negligible(&self, tol: f64) -> bool {
                (self.abs() as f64) <= tol
            }

            fn sqrt_checked(&self) -> Option<Self> {
                (*self >= 0.0).then(|| self.sqrt())
            }

            fn cbrt_checked(&self) -> Option<Self> {
                Some(self.cbrt())
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn from_f64_approx(x: f64) -> Self {
        rationalize(x, RATIONALIZE_MAX_DEN)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> BigRational {
        self.clone()
    }

    fn is_negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }

    fn sqrt_checked(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = exact_root(self.numer(), 2)?;
        let d = exact_root(self.denom(), 2)?;
        Some(BigRational::new(n, d))
    }

    fn cbrt_checked(&self) -> Option<Self> {
        let n = exact_root(&self.numer().abs(), 3)?;
        let d = exact_root(self.denom(), 3)?;
        let r = BigRational::new(n, d);
        Some(if self.is_negative() { -r } else { r })
    }
}

fn exact_root(v: &BigInt, k: u32) -> Option<BigInt> {
    let r = num_integer::Roots::nth_root(v, k);
    (num_traits::pow(r.clone(), k as usize) == *v).then_some(r)
}

/// Best rational approximation of `x` with denominator at most `max_den`
/// (continued fraction convergents and the last semiconvergent).
pub fn rationalize(x: f64, max_den: i64) -> BigRational {
    if !x.is_finite() {
        return BigRational::zero();
    }
    let neg = x < 0.0;
    let mut frac = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let max_den = max_den as i128;
    for _ in 0..64 {
        let a = frac.floor();
        if a > 1e18 {
            break;
        }
        let ai = a as i128;
        let q2 = q0 + ai * q1;
        if q2 > max_den {
            let k = (max_den - q0) / q1;
            let (ps, qs) = (p0 + k * p1, q0 + k * q1);
            let err_semi = (ps as f64 / qs as f64 - x.abs()).abs();
            let err_conv = (p1 as f64 / q1 as f64 - x.abs()).abs();
            if k > 0 && err_semi < err_conv {
                p1 = ps;
                q1 = qs;
            }
            break;
        }
        let p2 = p0 + ai * p1;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let rest = frac - a;
        if rest < 1e-15 {
            break;
        }
        frac = 1.0 / rest;
    }
    let r = BigRational::new(BigInt::from(p1), BigInt::from(q1));
    if neg {
        -r
    } else {
        r
    }
}

/// Parses `"p/q"`, integers and plain decimals (`"0.25"`, `"-1.5e-3"` is
/// rejected) into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str_radix(n.trim(), 10).ok()?;
        let d = BigInt::from_str_radix(d.trim(), 10).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if !frac.chars().all(|c| c.is_ascii_digit()) || frac.is_empty() && int_digits.is_empty() {
            return None;
        }
        let digits = format!("{int_digits}{frac}");
        let mag = BigInt::from_str_radix(if digits.is_empty() { "0" } else { &digits }, 10).ok()?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let r = BigRational::new(mag, den);
        return Some(if neg { -r } else { r });
    }
    BigInt::from_str_radix(s, 10).ok().map(BigRational::from_integer)
}

/// Renders a rational as `"p/q"` (or `"p"` for integers).
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Zero test with the scale-aware float rule `|v| <= tol * (1 + scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-9 }
    }
}

impl Tolerance {
    pub fn new(abs: f64) -> Self {
        Tolerance { abs }
    }

    pub fn is_zero<S: Scalar>(&self, v: &S, scale: f64) -> bool {
        v.is_negligible(self.abs * (1.0 + scale.abs()))
    }
}
