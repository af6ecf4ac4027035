//! Fixed-size vectors and second-order tensors in the plane.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// A vector of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2(pub [f64; 2]);

impl Vec2 {
    pub const ZERO: Vec2 = Vec2([0.0, 0.0]);
    pub const E1: Vec2 = Vec2([1.0, 0.0]);
    pub const E2: Vec2 = Vec2([0.0, 1.0]);

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2([x, y])
    }

    /// Unit vector at polar angle `theta`.
    pub fn polar(theta: f64) -> Self {
        Vec2([theta.cos(), theta.sin()])
    }

    /// Basis vector `e_i`, `i ∈ {0, 1}`.
    pub fn unit(i: usize) -> Self {
        let mut v = Vec2::ZERO;
        v.0[i] = 1.0;
        v
    }

    pub fn x(self) -> f64 {
        self.0[0]
    }

    pub fn y(self) -> f64 {
        self.0[1]
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1]
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.0[0].hypot(self.0[1])
    }

    /// Counter-clockwise rotation by a right angle.
    pub fn perp(self) -> Vec2 {
        Vec2([-self.0[1], self.0[0]])
    }

    pub fn outer(self, other: Vec2) -> Mat2 {
        Mat2([
            [self.0[0] * other.0[0], self.0[0] * other.0[1]],
            [self.0[1] * other.0[0], self.0[1] * other.0[1]],
        ])
    }

    pub fn is_finite(self) -> bool {
        self.0[0].is_finite() && self.0[1].is_finite()
    }
}

impl Index<usize> for Vec2 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec2 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.0[0] += o.0[0];
        self.0[1] += o.0[1];
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.0[0] -= o.0[0];
        self.0[1] -= o.0[1];
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2([-self.0[0], -self.0[1]])
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2([self.0[0] * s, self.0[1] * s])
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

/// A second-order tensor `A = [a_ij]` acting on vectors by `(Av)_i = a_ij v_j`.
///
/// Gradients follow the convention `(∇u)_ij = ∂_j u_i`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub fn from_fn(f: impl Fn(usize, usize) -> f64) -> Self {
        Mat2([[f(0, 0), f(0, 1)], [f(1, 0), f(1, 1)]])
    }

    pub fn transpose(self) -> Mat2 {
        Mat2::from_fn(|i, j| self.0[j][i])
    }

    /// Symmetric part, `∇̂u` when `self = ∇u`.
    pub fn sym(self) -> Mat2 {
        Mat2::from_fn(|i, j| 0.5 * (self.0[i][j] + self.0[j][i]))
    }

    /// Skew part, `∇̃u` when `self = ∇u`.
    pub fn skw(self) -> Mat2 {
        Mat2::from_fn(|i, j| 0.5 * (self.0[i][j] - self.0[j][i]))
    }

    pub fn trace(self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Inner product `A·B = a_ij b_ij`.
    pub fn dot(self, other: Mat2) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += self.0[i][j] * other.0[i][j];
            }
        }
        s
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2([
            self.0[0][0] * v.0[0] + self.0[0][1] * v.0[1],
            self.0[1][0] * v.0[0] + self.0[1][1] * v.0[1],
        ])
    }

    pub fn matmul(self, other: Mat2) -> Mat2 {
        Mat2::from_fn(|i, j| self.0[i][0] * other.0[0][j] + self.0[i][1] * other.0[1][j])
    }

    pub fn inverse(self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(self.0[1][1], -self.0[0][1], -self.0[1][0], self.0[0][0]) * (1.0 / d))
    }

    /// Column `j` as a vector.
    pub fn column(self, j: usize) -> Vec2 {
        Vec2([self.0[0][j], self.0[1][j]])
    }

    pub fn from_columns(c0: Vec2, c1: Vec2) -> Mat2 {
        Mat2([[c0.0[0], c1.0[0]], [c0.0[1], c1.0[1]]])
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn sym_eigenvalues(self) -> (f64, f64) {
        let s = self.sym();
        let mean = 0.5 * s.trace();
        let half_diff = 0.5 * (s.0[0][0] - s.0[1][1]);
        let rad = half_diff.hypot(s.0[0][1]);
        (mean - rad, mean + rad)
    }

    /// Singular values, ascending.
    pub fn singular_values(self) -> (f64, f64) {
        let ata = self.transpose().matmul(self);
        let (lo, hi) = ata.sym_eigenvalues();
        (lo.max(0.0).sqrt(), hi.max(0.0).sqrt())
    }

    /// Spectral condition number; infinite for singular matrices.
    pub fn condition_number(self) -> f64 {
        let (lo, hi) = self.singular_values();
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().flatten().all(|a| a.is_finite())
    }
}

impl Index<(usize, usize)> for Mat2 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat2 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::from_fn(|i, j| self.0[i][j] + o.0[i][j])
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::from_fn(|i, j| self.0[i][j] - o.0[i][j])
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self * -1.0
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        Mat2::from_fn(|i, j| self.0[i][j] * s)
    }
}

impl Mul<Mat2> for f64 {
    type Output = Mat2;
    fn mul(self, m: Mat2) -> Mat2 {
        m * self
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        self.apply(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_plus_skw_recovers_tensor() {
        let a = Mat2::new(1.0, -2.5, 0.75, 3.0);
        assert_eq!(a.sym() + a.skw(), a);
        assert!(a.skw().trace().abs() < 1e-15);
    }

    #[test]
    fn norm_vanishes_only_at_zero() {
        assert_eq!(Mat2::ZERO.norm_sq(), 0.0);
        assert!(Mat2::new(0.0, 1e-200, 0.0, 0.0).norm_sq() >= 0.0);
        assert!(Mat2::new(0.0, 1e-8, 0.0, 0.0).norm_sq() > 0.0);
    }

    #[test]
    fn inverse_and_condition() {
        let a = Mat2::new(2.0, 1.0, 0.0, 3.0);
        let inv = a.inverse().unwrap();
        let id = a.matmul(inv);
        assert!((id - Mat2::IDENTITY).norm() < 1e-15);
        assert!(Mat2::ZERO.inverse().is_none());
        assert!((Mat2::IDENTITY.condition_number() - 1.0).abs() < 1e-15);
    }
}
