//! Number types shared by the exact-enumeration and LP code.
//!
//! `f64` comparisons go through a small absolute tolerance; `BigRational`
//! comparisons are exact. Every finite `f64` converts to the rational it
//! represents, so a rational run is exact with respect to the floating
//! inputs it was given.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Exact conversion; `None` for non-finite values.
    fn from_f64(v: f64) -> Option<Self>;
    fn to_f64(&self) -> f64;
    /// Magnitude below which values count as zero in pivoting decisions.
    fn tolerance() -> Self;

    fn is_positive(&self) -> bool {
        *self > Self::tolerance()
    }

    fn is_negative(&self) -> bool {
        *self < -Self::tolerance()
    }

    fn is_negligible(&self) -> bool {
        !self.is_positive() && !self.is_negative()
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn tolerance() -> Self {
        1e-11
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn tolerance() -> Self {
        Zero::zero()
    }

    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }

    fn is_negligible(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// `num / den` as an exact rational.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
