//! First-order dual numbers: value plus one directional derivative.
//!
//! Seeding the derivative slot along a chosen direction and pushing a value
//! through a formula yields the exact directional derivative of that formula.
//! The payload type is any [`Scalar`], so duals nest: `Dual<f64>` gives chart
//! metric derivatives (Christoffel symbols), and duals over parameter jets
//! differentiate frame fields along a surface.

use crate::scalar::{AngleScalar, Scalar};
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S> {
    pub v: S,
    pub d: S,
}

impl<S: Scalar> Dual<S> {
    #[inline]
    pub fn new(v: S, d: S) -> Self {
        Dual { v, d }
    }
    /// Constant: zero derivative.
    #[inline]
    pub fn c(v: S) -> Self {
        Dual { v, d: S::zero() }
    }
    /// Variable seeded with the given rate.
    #[inline]
    pub fn var(v: S, rate: S) -> Self {
        Dual { v, d: rate }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Dual<S>;
    #[inline]
    fn add(self, rhs: Dual<S>) -> Dual<S> {
        Dual::new(self.v + rhs.v, self.d + rhs.d)
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Dual<S>;
    #[inline]
    fn sub(self, rhs: Dual<S>) -> Dual<S> {
        Dual::new(self.v - rhs.v, self.d - rhs.d)
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Dual<S>;
    #[inline]
    fn mul(self, rhs: Dual<S>) -> Dual<S> {
        Dual::new(self.v * rhs.v, self.d * rhs.v + self.v * rhs.d)
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Dual<S>;
    #[inline]
    fn div(self, rhs: Dual<S>) -> Dual<S> {
        let q = self.v / rhs.v;
        Dual::new(q, (self.d - q * rhs.d) / rhs.v)
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Dual<S>;
    #[inline]
    fn neg(self) -> Dual<S> {
        Dual::new(-self.v, -self.d)
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Dual::c(S::from_f64(x))
    }
    #[inline]
    fn value(self) -> f64 {
        self.v.value()
    }
    #[inline]
    fn sin(self) -> Self {
        Dual::new(self.v.sin(), self.v.cos() * self.d)
    }
    #[inline]
    fn cos(self) -> Self {
        Dual::new(self.v.cos(), -(self.v.sin() * self.d))
    }
    #[inline]
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        Dual::new(r, self.d / r.scale(2.0))
    }
}

impl<S: AngleScalar> AngleScalar for Dual<S> {
    #[inline]
    fn atan2(y: Self, x: Self) -> Self {
        let r2 = x.v * x.v + y.v * y.v;
        Dual::new(S::atan2(y.v, x.v), (x.v * y.d - y.v * x.d) / r2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe(x: Dual<f64>) -> Dual<f64> {
        // x * sin(x) + cos(x) / (x + 2)  -- generic smooth composite
        x * x.sin() + x.cos() / (x + Dual::c(2.0))
    }

    fn probe_f(x: f64) -> f64 {
        x * x.sin() + x.cos() / (x + 2.0)
    }

    #[test]
    fn directional_derivative_matches_central_difference() {
        let h = 1e-6;
        for &x0 in &[-1.3, 0.2, 0.9, 2.4] {
            let d = probe(Dual::var(x0, 1.0)).d;
            let fd = (probe_f(x0 + h) - probe_f(x0 - h)) / (2.0 * h);
            assert!((d - fd).abs() < 1e-9, "x0={x0}: dual {d} vs fd {fd}");
        }
    }

    #[test]
    fn atan2_derivative_matches_central_difference() {
        let h = 1e-6;
        let f = |t: f64| (2.0 * t).sin().atan2(1.0 + t * t);
        let t0 = 0.7;
        let y = Dual::var((2.0 * t0).sin(), 2.0 * (2.0 * t0).cos());
        let x = Dual::var(1.0 + t0 * t0, 2.0 * t0);
        let d = Dual::atan2(y, x).d;
        let fd = (f(t0 + h) - f(t0 - h)) / (2.0 * h);
        assert!((d - fd).abs() < 1e-9, "dual {d} vs fd {fd}");
    }

    #[test]
    fn nested_duals_carry_second_derivatives() {
        // f(x) = sin(x) * x: f'' via Dual<Dual<f64>>.
        let f = |x: Dual<Dual<f64>>| x.sin() * x;
        let x0 = 0.9_f64;
        let inner = Dual::var(x0, 1.0);
        let x = Dual::new(inner, Dual::c(1.0));
        let y = f(x);
        let second = y.d.d; // d/dx of the outer derivative slot
        let exact = 2.0 * x0.cos() - x0 * x0.sin();
        assert!((second - exact).abs() < 1e-12, "{second} vs {exact}");
    }
}
