use std::f64::consts::{PI, TAU};
use std::ops::Mul;

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Element of SE(2): rotation by `theta` followed by translation `(tx, ty)`.
///
/// The angle is stored as a scalar in `(-pi, pi]`; matrix forms are produced
/// on demand. Applying the transform to a point `p` yields `R(theta) p + t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform2D {
    pub theta: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Default for RigidTransform2D {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform2D {
    pub fn new(theta: f64, tx: f64, ty: f64) -> Self {
        Self {
            theta: wrap_angle(theta),
            tx,
            ty,
        }
    }

    pub const fn identity() -> Self {
        Self {
            theta: 0.0,
            tx: 0.0,
            ty: 0.0,
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self::new(0.0, tx, ty)
    }

    pub fn rotation(theta: f64) -> Self {
        Self::new(theta, 0.0, 0.0)
    }

    /// Rotation by `theta` about `center`.
    pub fn rotation_about(theta: f64, center: Vector2<f64>) -> Self {
        let r = Self::rotation(theta);
        let c = r.rotate(center);
        Self::new(theta, center.x - c.x, center.y - c.y)
    }

    pub fn t(&self) -> Vector2<f64> {
        Vector2::new(self.tx, self.ty)
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.tx.is_finite() && self.ty.is_finite()
    }

    #[inline]
    pub fn rotate(&self, v: Vector2<f64>) -> Vector2<f64> {
        let (s, c) = self.theta.sin_cos();
        Vector2::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }

    #[inline]
    pub fn apply(&self, p: Vector2<f64>) -> Vector2<f64> {
        self.rotate(p) + self.t()
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        let t = self.rotate(other.t()) + self.t();
        Self::new(self.theta + other.theta, t.x, t.y)
    }

    pub fn inverse(&self) -> Self {
        let inv = Self {
            theta: -self.theta,
            tx: 0.0,
            ty: 0.0,
        };
        let t = -inv.rotate(self.t());
        Self::new(-self.theta, t.x, t.y)
    }

    /// `(tx, ty, theta)`; the identity maps to the zero vector.
    pub fn phi(&self) -> Vector3<f64> {
        Vector3::new(self.tx, self.ty, self.theta)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        let (s, c) = self.theta.sin_cos();
        Matrix3::new(c, -s, self.tx, s, c, self.ty, 0.0, 0.0, 1.0)
    }

    /// Reads the rotation angle from the upper-left block; the block is
    /// assumed orthonormal.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Self::new(m[(1, 0)].atan2(m[(0, 0)]), m[(0, 2)], m[(1, 2)])
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = self.matrix();
        let mut out = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                out[r * 3 + c] = m[(r, c)];
            }
        }
        out
    }

    pub fn from_row_major(v: &[f64; 9]) -> Self {
        Self::from_matrix(&Matrix3::from_row_slice(v))
    }

    /// Angular and translational distance to `other`, with translation
    /// measured as the displacement of `probe` under the two transforms.
    pub fn distance_at(&self, other: &Self, probe: Vector2<f64>) -> (f64, f64) {
        let dtheta = wrap_angle(self.theta - other.theta).abs();
        let dt = (self.apply(probe) - other.apply(probe)).norm();
        (dtheta, dt)
    }
}

impl Mul for RigidTransform2D {
    type Output = RigidTransform2D;

    fn mul(self, rhs: Self) -> Self {
        self.compose(&rhs)
    }
}

impl Mul<&RigidTransform2D> for &RigidTransform2D {
    type Output = RigidTransform2D;

    fn mul(self, rhs: &RigidTransform2D) -> RigidTransform2D {
        self.compose(rhs)
    }
}
