//! Plane vectors, 2x2 matrices and the complex identification `(x, y) <-> x + iy`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// A point or vector of the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlaneVec {
    pub x: f64,
    pub y: f64,
}

impl PlaneVec {
    pub const ZERO: PlaneVec = PlaneVec { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn polar(r: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(r * c, r * s)
    }

    #[inline]
    pub fn dot(self, o: PlaneVec) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// Scalar cross product `x1 y2 - y1 x2`.
    #[inline]
    pub fn cross(self, o: PlaneVec) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Counterclockwise rotation by a right angle (multiplication by `i`).
    #[inline]
    pub fn rot(self) -> Self {
        Self::new(-self.y, self.x)
    }

    /// Clockwise rotation by a right angle (multiplication by `-i`).
    #[inline]
    pub fn rot_neg(self) -> Self {
        Self::new(self.y, -self.x)
    }

    /// Complex conjugate.
    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.x, -self.y)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn dist(self, o: PlaneVec) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    #[inline]
    pub fn from_complex(z: Complex64) -> Self {
        Self::new(z.re, z.im)
    }

    /// Polar angle in `(-pi, pi]`.
    #[inline]
    pub fn arg(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl From<Complex64> for PlaneVec {
    fn from(z: Complex64) -> Self {
        Self::from_complex(z)
    }
}

impl From<PlaneVec> for Complex64 {
    fn from(p: PlaneVec) -> Self {
        p.to_complex()
    }
}

impl Add for PlaneVec {
    type Output = PlaneVec;
    #[inline]
    fn add(self, o: PlaneVec) -> PlaneVec {
        PlaneVec::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for PlaneVec {
    type Output = PlaneVec;
    #[inline]
    fn sub(self, o: PlaneVec) -> PlaneVec {
        PlaneVec::new(self.x - o.x, self.y - o.y)
    }
}

impl AddAssign for PlaneVec {
    #[inline]
    fn add_assign(&mut self, o: PlaneVec) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl SubAssign for PlaneVec {
    #[inline]
    fn sub_assign(&mut self, o: PlaneVec) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Neg for PlaneVec {
    type Output = PlaneVec;
    #[inline]
    fn neg(self) -> PlaneVec {
        PlaneVec::new(-self.x, -self.y)
    }
}

impl Mul<f64> for PlaneVec {
    type Output = PlaneVec;
    #[inline]
    fn mul(self, s: f64) -> PlaneVec {
        PlaneVec::new(self.x * s, self.y * s)
    }
}

impl Mul<PlaneVec> for f64 {
    type Output = PlaneVec;
    #[inline]
    fn mul(self, p: PlaneVec) -> PlaneVec {
        p * self
    }
}

/// Real 2x2 matrix `[[a, b], [c, d]]`, acting on column vectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };
    /// Matrix of multiplication by `i`.
    pub const ROT: Mat2 = Mat2 { a: 0.0, b: -1.0, c: 1.0, d: 0.0 };
    /// Matrix of complex conjugation.
    pub const CONJ: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: -1.0 };

    #[inline]
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn from_cols(c0: PlaneVec, c1: PlaneVec) -> Self {
        Self::new(c0.x, c1.x, c0.y, c1.y)
    }

    /// Outer product `u ⊗ v` (so `(u ⊗ v) w = <v, w> u`).
    pub fn outer(u: PlaneVec, v: PlaneVec) -> Self {
        Self::new(u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y)
    }

    pub fn scalar(s: f64) -> Self {
        Self::new(s, 0.0, 0.0, s)
    }

    #[inline]
    pub fn apply(&self, v: PlaneVec) -> PlaneVec {
        PlaneVec::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a, self.c, self.b, self.d)
    }

    /// Symmetric part `(A + A^T) / 2`.
    pub fn sym(&self) -> Self {
        let off = 0.5 * (self.b + self.c);
        Self::new(self.a, off, off, self.d)
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        let scale = self.frobenius().powi(2);
        if !det.is_finite() || det.abs() <= 1e-300 || det.abs() <= 1e-15 * scale {
            return None;
        }
        let inv = 1.0 / det;
        Some(Self::new(self.d * inv, -self.b * inv, -self.c * inv, self.a * inv))
    }

    /// Solves `self * x = rhs`.
    pub fn solve(&self, rhs: PlaneVec) -> Option<PlaneVec> {
        self.inverse().map(|m| m.apply(rhs))
    }

    pub fn frobenius(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn sym_eigenvalues(&self) -> (f64, f64) {
        let s = self.sym();
        let mean = 0.5 * (s.a + s.d);
        let rad = (0.25 * (s.a - s.d).powi(2) + s.b * s.b).sqrt();
        (mean - rad, mean + rad)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

/// Central finite-difference Jacobian of a plane map.
pub fn fd_jacobian(f: impl Fn(PlaneVec) -> PlaneVec, at: PlaneVec) -> Mat2 {
    let h = 1e-6 * (1.0 + at.norm());
    let dx = (f(at + PlaneVec::new(h, 0.0)) - f(at - PlaneVec::new(h, 0.0))) * (0.5 / h);
    let dy = (f(at + PlaneVec::new(0.0, h)) - f(at - PlaneVec::new(0.0, h))) * (0.5 / h);
    Mat2::from_cols(dx, dy)
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self { x_min, x_max, y_min, y_max }
    }

    /// The square `[-half, half]^2`.
    pub fn centered(half: f64) -> Self {
        Self::new(-half, half, -half, half)
    }

    pub fn is_valid(&self) -> bool {
        self.x_min.is_finite()
            && self.x_max.is_finite()
            && self.y_min.is_finite()
            && self.y_max.is_finite()
            && self.x_max > self.x_min
            && self.y_max > self.y_min
    }

    pub fn contains(&self, p: PlaneVec) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }
}
