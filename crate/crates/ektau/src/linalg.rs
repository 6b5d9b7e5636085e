//! Minimal fixed-size linear algebra over generic scalars.
//!
//! Three-component vectors and symmetric 3x3 matrices are all the ambient
//! calculus needs; keeping them generic lets the same formulas run on plain
//! floats, dual numbers and parameter jets.

use crate::scalar::Scalar;
use std::ops::{Add, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

pub type V3 = Vec3<f64>;

impl<S: Scalar> Vec3<S> {
    #[inline]
    pub fn new(x: S, y: S, z: S) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Vec3::new(S::zero(), S::zero(), S::zero())
    }

    #[inline]
    pub fn scale(self, c: S) -> Self {
        Vec3::new(self.x * c, self.y * c, self.z * c)
    }

    /// Componentwise (chart) dot product; the metric inner product lives on
    /// [`Mat3`].
    #[inline]
    pub fn dot_chart(self, o: Self) -> S {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Chart-coordinate cross product with the standard orientation.
    #[inline]
    pub fn cross_chart(self, o: Self) -> Self {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn map_value(self) -> V3 {
        Vec3::new(self.x.value(), self.y.value(), self.z.value())
    }

    pub fn from_array(a: [S; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [S; 3] {
        [self.x, self.y, self.z]
    }
}

impl V3 {
    /// Euclidean norm of the raw components (chart, not metric).
    #[inline]
    pub fn norm_chart(self) -> f64 {
        self.dot_chart(self).sqrt()
    }
}

impl<S: Scalar> Add for Vec3<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<S: Scalar> Sub for Vec3<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<S: Scalar> Neg for Vec3<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Symmetric 3x3 matrix stored densely; used for the chart metric tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<S> {
    pub m: [[S; 3]; 3],
}

pub type M3 = Mat3<f64>;

impl<S: Scalar> Mat3<S> {
    pub fn from_rows(m: [[S; 3]; 3]) -> Self {
        Mat3 { m }
    }

    pub fn identity() -> Self {
        let o = S::one();
        let z = S::zero();
        Mat3 { m: [[o, z, z], [z, o, z], [z, z, o]] }
    }

    #[inline]
    pub fn apply(&self, v: Vec3<S>) -> Vec3<S> {
        Vec3::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y + self.m[0][2] * v.z,
            self.m[1][0] * v.x + self.m[1][1] * v.y + self.m[1][2] * v.z,
            self.m[2][0] * v.x + self.m[2][1] * v.y + self.m[2][2] * v.z,
        )
    }

    /// Bilinear form u^T M v.
    #[inline]
    pub fn inner(&self, u: Vec3<S>, v: Vec3<S>) -> S {
        u.dot_chart(self.apply(v))
    }

    #[inline]
    pub fn det(&self) -> S {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse by adjugate; callers guarantee a nondegenerate matrix.
    pub fn inverse(&self) -> Self {
        let m = &self.m;
        let det = self.det();
        let inv = S::one() / det;
        let c = |r1: usize, c1: usize, r2: usize, c2: usize| {
            (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) * inv
        };
        Mat3 {
            m: [
                [c(1, 1, 2, 2), c(0, 2, 2, 1), c(0, 1, 1, 2)],
                [c(1, 2, 2, 0), c(0, 0, 2, 2), c(0, 2, 1, 0)],
                [c(1, 0, 2, 1), c(0, 1, 2, 0), c(0, 0, 1, 1)],
            ],
        }
    }

    pub fn map_value(&self) -> M3 {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.m[i][j].value();
            }
        }
        Mat3 { m: out }
    }
}

/// Solve the symmetric positive definite 2x2 system [[a,b],[b,c]] x = r.
#[inline]
pub fn solve_spd2(a: f64, b: f64, c: f64, r: [f64; 2]) -> [f64; 2] {
    let det = a * c - b * b;
    [(c * r[0] - b * r[1]) / det, (a * r[1] - b * r[0]) / det]
}

/// Eigenvalues of a 2x2 matrix with real spectrum, descending.
/// Clamps a tiny negative discriminant produced by roundoff.
#[inline]
pub fn eig2_desc(m: [[f64; 2]; 2]) -> (f64, f64) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 + disc, tr / 2.0 - disc)
}
