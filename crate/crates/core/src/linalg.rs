//! Fixed-size planar vector and 2×2 matrix types.
//!
//! Everything in this crate lives in the east-north plane, so a pair of tiny
//! `Copy` types covers all the algebra the filter needs.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point or direction in the east-north plane.
///
/// Serialized as a two-element array `[e, n]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub e: f64,
    pub n: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { e: 0.0, n: 0.0 };

    pub const fn new(e: f64, n: f64) -> Self {
        Vec2 { e, n }
    }

    /// Unit vector at angle `theta` measured counter-clockwise from east.
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2::new(c, s)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.e * other.e + self.n * other.n
    }

    /// z-component of the 3-D cross product `self × other`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.e * other.n - self.n * other.e
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.e.hypot(self.n)
    }

    /// Counter-clockwise quarter turn: `(a, b) -> (-b, a)`.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.n, self.e)
    }

    /// Rotate counter-clockwise by the rotation whose cosine and sine are `c`, `s`.
    pub fn rotate_cs(self, c: f64, s: f64) -> Vec2 {
        Vec2::new(c * self.e - s * self.n, s * self.e + c * self.n)
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        self.rotate_cs(c, s)
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(k * self.e, k * self.n)
    }

    pub fn is_finite(self) -> bool {
        self.e.is_finite() && self.n.is_finite()
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.e, v.n]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.e + o.e, self.n + o.n)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.e += o.e;
        self.n += o.n;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.e - o.e, self.n - o.n)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.e, -self.n)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v.scale(self)
    }
}

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[[f64; 2]; 2]", into = "[[f64; 2]; 2]")]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 { m: [[0.0; 2]; 2] };
    pub const IDENTITY: Mat2 = Mat2 {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 {
            m: [[a, b], [c, d]],
        }
    }

    pub const fn diag(a: f64, d: f64) -> Self {
        Mat2::new(a, 0.0, 0.0, d)
    }

    pub fn scalar(k: f64) -> Self {
        Mat2::diag(k, k)
    }

    pub fn transpose(&self) -> Mat2 {
        let [[a, b], [c, d]] = self.m;
        Mat2::new(a, c, b, d)
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> f64 {
        let [[a, b], [c, d]] = self.m;
        a * d - b * c
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let [[a, b], [c, d]] = self.m;
        let inv = Mat2::new(d / det, -b / det, -c / det, a / det);
        inv.is_finite().then_some(inv)
    }

    pub fn scale(&self, k: f64) -> Mat2 {
        let [[a, b], [c, d]] = self.m;
        Mat2::new(k * a, k * b, k * c, k * d)
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        let [[a, b], [c, d]] = self.m;
        Vec2::new(a * v.e + b * v.n, c * v.e + d * v.n)
    }

    /// `(M + Mᵀ) / 2`.
    pub fn symmetrized(&self) -> Mat2 {
        let off = 0.5 * (self.m[0][1] + self.m[1][0]);
        Mat2::new(self.m[0][0], off, off, self.m[1][1])
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// Relative asymmetry `|b - c| / max(max_abs, tiny)`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        (self.m[0][1] - self.m[1][0]).abs() / scale
    }

    /// Eigenvalues of the symmetric part, smallest first.
    pub fn sym_eigenvalues(&self) -> (f64, f64) {
        let s = self.symmetrized();
        let [[a, b], [_, d]] = s.m;
        let mean = 0.5 * (a + d);
        let radius = (0.5 * (a - d)).hypot(b);
        (mean - radius, mean + radius)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|x| x.is_finite())
    }
}

impl From<[[f64; 2]; 2]> for Mat2 {
    fn from(m: [[f64; 2]; 2]) -> Self {
        Mat2 { m }
    }
}

impl From<Mat2> for [[f64; 2]; 2] {
    fn from(m: Mat2) -> Self {
        m.m
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let mut out = self;
        for (row, orow) in out.m.iter_mut().zip(o.m.iter()) {
            for (x, y) in row.iter_mut().zip(orow.iter()) {
                *x += y;
            }
        }
        out
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let mut out = Mat2::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j];
            }
        }
        out
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        self.mul_vec(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2::new(2.0, 1.0, 0.5, 3.0);
        let p = m * m.inverse().unwrap();
        assert!((p - Mat2::IDENTITY).max_abs() < 1e-15);
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).inverse().is_none());
    }

    #[test]
    fn symmetric_eigenvalues() {
        let (lo, hi) = Mat2::new(2.0, 1.0, 1.0, 2.0).sym_eigenvalues();
        assert!((lo - 1.0).abs() < 1e-15);
        assert!((hi - 3.0).abs() < 1e-15);
        let (lo, _) = Mat2::diag(-1.0, 4.0).sym_eigenvalues();
        assert_eq!(lo, -1.0);
    }

    #[test]
    fn perp_and_rotation_agree() {
        let v = Vec2::new(0.3, -1.7);
        let r = v.rotate(std::f64::consts::FRAC_PI_2);
        assert!((r - v.perp()).norm() < 1e-15);
        assert_eq!(v.cross(v.perp()), v.norm_sq());
    }
}
