//! Forward-mode 2-jets in two parameters.
//!
//! `Jet2<S>` carries a value together with first and second partial
//! derivatives with respect to the surface parameters (u, v). Surface
//! parametrizations are written once as generic scalar formulas and
//! evaluated on jets to produce exact position/velocity/curvature data.
//! The base scalar is itself generic so that a jet of duals can transport
//! one extra directional derivative through the same formulas.

use crate::scalar::Scalar;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2<S> {
    pub v: S,
    pub du: S,
    pub dv: S,
    pub duu: S,
    pub duv: S,
    pub dvv: S,
}

impl<S: Scalar> Jet2<S> {
    #[inline]
    pub fn c(v: S) -> Self {
        let z = S::zero();
        Jet2 { v, du: z, dv: z, duu: z, duv: z, dvv: z }
    }

    /// The u coordinate as a jet: du = 1, everything else flat.
    #[inline]
    pub fn var_u(v: S) -> Self {
        let z = S::zero();
        Jet2 { v, du: S::one(), dv: z, duu: z, duv: z, dvv: z }
    }

    /// The v coordinate as a jet: dv = 1, everything else flat.
    #[inline]
    pub fn var_v(v: S) -> Self {
        let z = S::zero();
        Jet2 { v, du: z, dv: S::one(), duu: z, duv: z, dvv: z }
    }

    #[inline]
    fn recip(self) -> Self {
        let r = S::one() / self.v;
        let r2 = r * r;
        let r3 = r2 * r;
        let two = S::from_f64(2.0);
        Jet2 {
            v: r,
            du: -self.du * r2,
            dv: -self.dv * r2,
            duu: -self.duu * r2 + two * self.du * self.du * r3,
            duv: -self.duv * r2 + two * self.du * self.dv * r3,
            dvv: -self.dvv * r2 + two * self.dv * self.dv * r3,
        }
    }
}

impl<S: Scalar> Add for Jet2<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Jet2 {
            v: self.v + o.v,
            du: self.du + o.du,
            dv: self.dv + o.dv,
            duu: self.duu + o.duu,
            duv: self.duv + o.duv,
            dvv: self.dvv + o.dvv,
        }
    }
}

impl<S: Scalar> Sub for Jet2<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Jet2 {
            v: self.v - o.v,
            du: self.du - o.du,
            dv: self.dv - o.dv,
            duu: self.duu - o.duu,
            duv: self.duv - o.duv,
            dvv: self.dvv - o.dvv,
        }
    }
}

impl<S: Scalar> Mul for Jet2<S> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let two = S::from_f64(2.0);
        Jet2 {
            v: self.v * o.v,
            du: self.du * o.v + self.v * o.du,
            dv: self.dv * o.v + self.v * o.dv,
            // (f g)'' = f'' g + 2 f' g' + f g''
            duu: self.duu * o.v + two * self.du * o.du + self.v * o.duu,
            duv: self.duv * o.v + self.du * o.dv + self.dv * o.du + self.v * o.duv,
            dvv: self.dvv * o.v + two * self.dv * o.dv + self.v * o.dvv,
        }
    }
}

impl<S: Scalar> Div for Jet2<S> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<S: Scalar> Neg for Jet2<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Jet2 {
            v: -self.v,
            du: -self.du,
            dv: -self.dv,
            duu: -self.duu,
            duv: -self.duv,
            dvv: -self.dvv,
        }
    }
}

impl<S: Scalar> Scalar for Jet2<S> {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Jet2::c(S::from_f64(x))
    }
    #[inline]
    fn value(self) -> f64 {
        self.v.value()
    }

    #[inline]
    fn sin(self) -> Self {
        let s = self.v.sin();
        let c = self.v.cos();
        Jet2 {
            v: s,
            du: c * self.du,
            dv: c * self.dv,
            duu: c * self.duu - s * self.du * self.du,
            duv: c * self.duv - s * self.du * self.dv,
            dvv: c * self.dvv - s * self.dv * self.dv,
        }
    }

    #[inline]
    fn cos(self) -> Self {
        let s = self.v.sin();
        let c = self.v.cos();
        Jet2 {
            v: c,
            du: -s * self.du,
            dv: -s * self.dv,
            duu: -s * self.duu - c * self.du * self.du,
            duv: -s * self.duv - c * self.du * self.dv,
            dvv: -s * self.dvv - c * self.dv * self.dv,
        }
    }

    #[inline]
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        let half = S::from_f64(0.5) / r;
        let quarter = S::from_f64(0.25) / (r * r * r);
        Jet2 {
            v: r,
            du: self.du * half,
            dv: self.dv * half,
            duu: self.duu * half - self.du * self.du * quarter,
            duv: self.duv * half - self.du * self.dv * quarter,
            dvv: self.dvv * half - self.dv * self.dv * quarter,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type J = Jet2<f64>;

    fn seed(u: f64, v: f64) -> (J, J) {
        (J::var_u(u), J::var_v(v))
    }

    // Composite with products, quotients, roots and trig in both variables.
    fn probe(u: J, v: J) -> J {
        let a = u * v.sin() + (u * u + v * v + J::from_f64(1.0)).sqrt();
        let b = v.cos() / (u * u + J::from_f64(2.0));
        a * b + a
    }

    fn probe_f(u: f64, v: f64) -> f64 {
        let a = u * v.sin() + (u * u + v * v + 1.0).sqrt();
        let b = v.cos() / (u * u + 2.0);
        a * b + a
    }

    #[test]
    fn jet_matches_central_differences() {
        let h = 1e-4;
        for &(u0, v0) in &[(0.3, -0.8), (1.1, 0.4), (-0.5, 2.0)] {
            let (u, v) = seed(u0, v0);
            let j = probe(u, v);
            let f = probe_f;
            let fd_u = (f(u0 + h, v0) - f(u0 - h, v0)) / (2.0 * h);
            let fd_v = (f(u0, v0 + h) - f(u0, v0 - h)) / (2.0 * h);
            let fd_uu = (f(u0 + h, v0) - 2.0 * f(u0, v0) + f(u0 - h, v0)) / (h * h);
            let fd_vv = (f(u0, v0 + h) - 2.0 * f(u0, v0) + f(u0, v0 - h)) / (h * h);
            let fd_uv = (f(u0 + h, v0 + h) - f(u0 + h, v0 - h) - f(u0 - h, v0 + h)
                + f(u0 - h, v0 - h))
                / (4.0 * h * h);
            assert!((j.v - f(u0, v0)).abs() < 1e-14);
            assert!((j.du - fd_u).abs() < 1e-7, "du {} vs {}", j.du, fd_u);
            assert!((j.dv - fd_v).abs() < 1e-7, "dv {} vs {}", j.dv, fd_v);
            assert!((j.duu - fd_uu).abs() < 1e-5, "duu {} vs {}", j.duu, fd_uu);
            assert!((j.duv - fd_uv).abs() < 1e-6, "duv {} vs {}", j.duv, fd_uv);
            assert!((j.dvv - fd_vv).abs() < 1e-5, "dvv {} vs {}", j.dvv, fd_vv);
        }
    }

    #[test]
    fn nested_dual_transports_extra_direction() {
        use crate::dual::Dual;
        // Evaluate the jet of probe along the dual direction (a, b) in (u, v):
        // the dual slot of each jet field must equal the directional derivative
        // of that field.
        let (u0, v0) = (0.7, -0.4);
        let (a, b) = (0.6, -1.2);
        let u = Jet2::<Dual<f64>>::var_u(Dual::var(u0, a));
        let v = Jet2::<Dual<f64>>::var_v(Dual::var(v0, b));
        let j = {
            let one = Jet2::<Dual<f64>>::from_f64(1.0);
            let two = Jet2::<Dual<f64>>::from_f64(2.0);
            let aa = u * v.sin() + (u * u + v * v + one).sqrt();
            let bb = v.cos() / (u * u + two);
            aa * bb + aa
        };
        let h = 1e-6;
        let (ju, jv) = seed(u0 + h * a, v0 + h * b);
        let plus = probe(ju, jv);
        let (ju, jv) = seed(u0 - h * a, v0 - h * b);
        let minus = probe(ju, jv);
        let fd_val = (plus.v - minus.v) / (2.0 * h);
        let fd_du = (plus.du - minus.du) / (2.0 * h);
        let fd_duu = (plus.duu - minus.duu) / (2.0 * h);
        assert!((j.v.d - fd_val).abs() < 1e-8, "{} vs {}", j.v.d, fd_val);
        assert!((j.du.d - fd_du).abs() < 1e-8, "{} vs {}", j.du.d, fd_du);
        assert!((j.duu.d - fd_duu).abs() < 1e-7, "{} vs {}", j.duu.d, fd_duu);
    }
}
