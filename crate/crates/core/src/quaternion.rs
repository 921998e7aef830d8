//! Quaternions and the imaginary quaternions `Im H`, identified with `su(2)`.
//!
//! Multiplication follows the Hamilton table `i^2 = j^2 = k^2 = -1`,
//! `ij = k`, `jk = i`, `ki = j`.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// `w + x i + y j + z k`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    /// The quaternion `x_1 + x_2 i + x_3 j + x_4 k` attached to a point of `R^4`.
    pub const fn from_point(p: &[f64; 4]) -> Self {
        Self::new(p[0], p[1], p[2], p[3])
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Imaginary part, dropping `w`.
    pub fn im(self) -> ImQuaternion {
        ImQuaternion::new(self.x, self.y, self.z)
    }
}

impl Mul for Quaternion {
    type Output = Self;
    fn mul(self, q: Self) -> Self {
        let p = self;
        Self::new(
            p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
            p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
            p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
            p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
        )
    }
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, q: Self) -> Self {
        Self::new(self.w + q.w, self.x + q.x, self.y + q.y, self.z + q.z)
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, q: Self) -> Self {
        Self::new(self.w - q.w, self.x - q.x, self.y - q.y, self.z - q.z)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

/// `a i + b j + c k`, an element of `su(2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ImQuaternion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ImQuaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);
    pub const I: Self = Self::new(1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 1.0);

    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn to_quaternion(self) -> Quaternion {
        Quaternion::new(0.0, self.a, self.b, self.c)
    }

    /// Component dot product, equal to `Re(p conj(q))`.
    pub fn dot(self, q: Self) -> f64 {
        self.a * q.a + self.b * q.b + self.c * q.c
    }

    pub fn norm_sqr(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s)
    }

    /// Lie bracket `pq - qp`, which is twice the cross product.
    pub fn bracket(self, q: Self) -> Self {
        let p = self;
        Self::new(
            2.0 * (p.b * q.c - p.c * q.b),
            2.0 * (p.c * q.a - p.a * q.c),
            2.0 * (p.a * q.b - p.b * q.a),
        )
    }

    pub fn max_abs(self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs())
    }
}

impl Add for ImQuaternion {
    type Output = Self;
    fn add(self, q: Self) -> Self {
        Self::new(self.a + q.a, self.b + q.b, self.c + q.c)
    }
}

impl AddAssign for ImQuaternion {
    fn add_assign(&mut self, q: Self) {
        *self = *self + q;
    }
}

impl Sub for ImQuaternion {
    type Output = Self;
    fn sub(self, q: Self) -> Self {
        Self::new(self.a - q.a, self.b - q.b, self.c - q.c)
    }
}

impl SubAssign for ImQuaternion {
    fn sub_assign(&mut self, q: Self) {
        *self = *self - q;
    }
}

impl Neg for ImQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul<ImQuaternion> for f64 {
    type Output = ImQuaternion;
    fn mul(self, q: ImQuaternion) -> ImQuaternion {
        q.scale(self)
    }
}

/// Hamilton product of two points.
pub fn quat_mul(p: Quaternion, q: Quaternion) -> Quaternion {
    p * q
}

/// Lie bracket on `Im H`.
pub fn bracket(p: ImQuaternion, q: ImQuaternion) -> ImQuaternion {
    p.bracket(q)
}
