//! Extended reals `[-inf, +inf]` with the arithmetic used for cost differences.
//!
//! Sums and differences that mix infinities of opposite effect are not
//! silently collapsed: they come back as [`Combined::Undefined`] and every
//! call site picks its own resolution through [`UndefinedRule`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Rational64;
use num_traits::Zero;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// An element of the extended real line over a finite scalar type `T`.
///
/// Variant order gives the total order `NegInf < Finite(_) < PosInf`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum Extended<T> {
    NegInf,
    Finite(T),
    PosInf,
}

/// Extended reals backed by `f64`. `Finite` never holds an infinity or NaN.
pub type ExtReal = Extended<f64>;

/// Extended rationals, used for exact finite-table computations.
pub type ExtRational = Extended<Rational64>;

/// Outcome of adding or subtracting two extended values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Combined<T> {
    Defined(Extended<T>),
    Undefined,
}

/// How an undefined combination is resolved at a particular call site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UndefinedRule {
    ToPosInf,
    ToNegInf,
}

impl<T> Combined<T> {
    pub fn resolve(self, rule: UndefinedRule) -> Extended<T> {
        match self {
            Combined::Defined(v) => v,
            Combined::Undefined => match rule {
                UndefinedRule::ToPosInf => Extended::PosInf,
                UndefinedRule::ToNegInf => Extended::NegInf,
            },
        }
    }

    pub fn defined(self) -> Option<Extended<T>> {
        match self {
            Combined::Defined(v) => Some(v),
            Combined::Undefined => None,
        }
    }

    pub fn is_undefined(&self) -> bool {
        matches!(self, Combined::Undefined)
    }
}

impl<T: Copy + Add<Output = T> + Sub<Output = T> + Neg<Output = T>> Extended<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite_value(&self) -> Option<T> {
        match *self {
            Extended::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn negate(self) -> Self {
        match self {
            Extended::NegInf => Extended::PosInf,
            Extended::PosInf => Extended::NegInf,
            Extended::Finite(v) => Extended::Finite(-v),
        }
    }

    /// `self + other`; `(+inf) + (-inf)` and `(-inf) + (+inf)` are undefined.
    pub fn add_ext(self, other: Self) -> Combined<T> {
        use Extended::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Combined::Defined(Finite(a + b)),
            (PosInf, NegInf) | (NegInf, PosInf) => Combined::Undefined,
            (PosInf, _) | (_, PosInf) => Combined::Defined(PosInf),
            (NegInf, _) | (_, NegInf) => Combined::Defined(NegInf),
        }
    }

    /// `self - other`; `(+inf) - (+inf)` and `(-inf) - (-inf)` are undefined.
    pub fn sub_ext(self, other: Self) -> Combined<T> {
        self.add_ext(other.negate())
    }
}

impl<T: Copy + Mul<Output = T> + Zero + PartialOrd> Extended<T> {
    /// Multiplication by a nonnegative finite weight, with `0 * (+-inf) = 0`.
    pub fn scale(self, w: T) -> Self {
        if w.is_zero() {
            return Extended::Finite(T::zero());
        }
        match self {
            Extended::Finite(v) => Extended::Finite(v * w),
            other => other,
        }
    }
}

impl<T: PartialOrd + Copy> Extended<T> {
    pub fn max_ext(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min_ext(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl ExtReal {
    pub const POS_INF: ExtReal = Extended::PosInf;
    pub const NEG_INF: ExtReal = Extended::NegInf;
    pub const ZERO: ExtReal = Extended::Finite(0.0);

    /// Wraps an `f64`; infinities map to the infinite variants, NaN is rejected.
    pub fn from_f64(v: f64) -> Result<Self> {
        if v.is_nan() {
            Err(Error::Numeric("NaN is not an extended real".into()))
        } else if v == f64::INFINITY {
            Ok(Extended::PosInf)
        } else if v == f64::NEG_INFINITY {
            Ok(Extended::NegInf)
        } else {
            Ok(Extended::Finite(v))
        }
    }

    /// Finite value; panics in debug builds on non-finite input.
    pub fn finite(v: f64) -> Self {
        debug_assert!(v.is_finite(), "ExtReal::finite({v})");
        Extended::Finite(v)
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Extended::NegInf => f64::NEG_INFINITY,
            Extended::Finite(v) => v,
            Extended::PosInf => f64::INFINITY,
        }
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }
}

impl ExtRational {
    pub fn from_int(v: i64) -> Self {
        Extended::Finite(Rational64::from_integer(v))
    }

    pub fn to_ext_real(self) -> ExtReal {
        match self {
            Extended::NegInf => Extended::NegInf,
            Extended::PosInf => Extended::PosInf,
            Extended::Finite(r) => Extended::Finite(*r.numer() as f64 / *r.denom() as f64),
        }
    }
}

impl Eq for ExtRational {}

impl Ord for ExtRational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).expect("rationals are totally ordered")
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::NegInf => write!(f, "-inf"),
            Extended::PosInf => write!(f, "+inf"),
            Extended::Finite(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => serializer.serialize_f64(*v),
            Extended::PosInf => serializer.serialize_str("+inf"),
            Extended::NegInf => serializer.serialize_str("-inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_places_infinities_at_ends() {
        assert!(ExtReal::NEG_INF < ExtReal::finite(-1e300));
        assert!(ExtReal::finite(1e300) < ExtReal::POS_INF);
        assert!(ExtReal::finite(1.0) < ExtReal::finite(2.0));
    }

    #[test]
    fn undefined_combinations() {
        let p = ExtReal::POS_INF;
        let n = ExtReal::NEG_INF;
        assert!(p.add_ext(n).is_undefined());
        assert!(n.add_ext(p).is_undefined());
        assert!(p.sub_ext(p).is_undefined());
        assert!(n.sub_ext(n).is_undefined());
        assert_eq!(p.sub_ext(n), Combined::Defined(p));
        assert_eq!(n.sub_ext(p), Combined::Defined(n));
    }

    #[test]
    fn resolution_rules() {
        let u = ExtReal::POS_INF.add_ext(ExtReal::NEG_INF);
        assert_eq!(u.resolve(UndefinedRule::ToPosInf), ExtReal::POS_INF);
        assert_eq!(u.resolve(UndefinedRule::ToNegInf), ExtReal::NEG_INF);
    }

    #[test]
    fn nan_rejected() {
        assert!(ExtReal::from_f64(f64::NAN).is_err());
        assert_eq!(ExtReal::from_f64(f64::INFINITY).unwrap(), ExtReal::POS_INF);
    }

    #[test]
    fn zero_weight_kills_infinity() {
        assert_eq!(ExtReal::POS_INF.scale(0.0), ExtReal::ZERO);
        assert_eq!(ExtReal::NEG_INF.scale(0.5), ExtReal::NEG_INF);
    }

    #[test]
    fn rational_arithmetic_is_exact() {
        let a = ExtRational::Finite(Rational64::new(1, 3));
        let b = ExtRational::Finite(Rational64::new(2, 3));
        assert_eq!(a.add_ext(b).defined(), Some(ExtRational::from_int(1)));
    }
}
