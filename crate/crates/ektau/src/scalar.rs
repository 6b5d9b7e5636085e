//! Scalar abstraction shared by plain `f64` evaluation, first-order dual
//! numbers and second-order parameter jets.
//!
//! Every geometric formula in this crate (chart metric, surface
//! parametrizations, frame construction) is written once against [`Scalar`]
//! and evaluated with whichever number type the caller needs. Derivatives
//! obtained this way are exact to roundoff; the independent finite-difference
//! oracle lives in [`crate::fd`] and in the test suites.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Closed field of smooth scalar values with the elementary functions the
/// chart formulas need.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    /// Value part, with all derivative payload stripped.
    fn value(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn scale(self, c: f64) -> Self {
        self * Self::from_f64(c)
    }
}

/// Scalars that additionally support the two-argument arctangent; needed by
/// the frame pipeline (angles) but not by surface parametrizations.
pub trait AngleScalar: Scalar {
    fn atan2(y: Self, x: Self) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

impl AngleScalar for f64 {
    #[inline]
    fn atan2(y: Self, x: Self) -> Self {
        f64::atan2(y, x)
    }
}
