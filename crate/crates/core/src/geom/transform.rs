use crate::scalar::{real, Real};

use super::Vec3;

/// Unit quaternion, w-first storage. Rotation constructors and composition
/// keep the norm at 1; composition renormalizes to bound drift over long
/// chains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat<R> {
    pub w: R,
    pub x: R,
    pub y: R,
    pub z: R,
}

impl<R: Real> Quat<R> {
    #[inline]
    pub fn identity() -> Self {
        Self {
            w: R::one(),
            x: R::zero(),
            y: R::zero(),
            z: R::zero(),
        }
    }

    /// Build from raw components, normalizing. `None` for a (near-)zero norm.
    pub fn from_wxyz(w: R, x: R, y: R, z: R) -> Option<Self> {
        Self { w, x, y, z }.normalized()
    }

    pub fn from_axis_angle(axis: Vec3<R>, angle: R) -> Option<Self> {
        let axis = axis.normalized()?;
        let half = angle * real::<R>(0.5);
        let (s, c) = (half.sin(), half.cos());
        Some(Self {
            w: c,
            x: axis.x * s,
            y: axis.y * s,
            z: axis.z * s,
        })
    }

    /// Exponential map: rotation vector (axis * angle) to quaternion.
    pub fn from_rotation_vector(v: Vec3<R>) -> Self {
        let angle = v.norm();
        if angle < real::<R>(1e-12) {
            // first-order expansion keeps the map smooth through zero
            let half = real::<R>(0.5);
            return Self {
                w: R::one(),
                x: v.x * half,
                y: v.y * half,
                z: v.z * half,
            }
            .normalized()
            .unwrap_or_else(Self::identity);
        }
        Self::from_axis_angle(v, angle).unwrap_or_else(Self::identity)
    }

    /// Logarithm map: quaternion to rotation vector with angle in [0, pi].
    pub fn to_rotation_vector(self) -> Vec3<R> {
        let q = if self.w < R::zero() {
            Self {
                w: -self.w,
                x: -self.x,
                y: -self.y,
                z: -self.z,
            }
        } else {
            self
        };
        let sin_half = Vec3::new(q.x, q.y, q.z).norm();
        if sin_half < real::<R>(1e-12) {
            return Vec3::new(q.x, q.y, q.z) * real::<R>(2.0);
        }
        let angle = real::<R>(2.0) * sin_half.atan2(q.w);
        Vec3::new(q.x, q.y, q.z) * (angle / sin_half)
    }

    #[inline]
    pub fn norm(self) -> R {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n <= R::zero() || !n.is_finite() {
            return None;
        }
        Some(Self {
            w: self.w / n,
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        })
    }

    #[inline]
    pub fn conjugate(self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Hamilton product (also available as the `*` operator). The result is
    /// renormalized whenever its squared norm drifts more than 1e-12 from
    /// one, which bounds accumulation over long composition chains while
    /// keeping exact-identity products bit-stable.
    #[allow(clippy::should_implement_trait)] // the `*` operator delegates here
    pub fn mul(self, rhs: Self) -> Self {
        let w = self.w * rhs.w - self.x * rhs.x - self.y * rhs.y - self.z * rhs.z;
        let x = self.w * rhs.x + self.x * rhs.w + self.y * rhs.z - self.z * rhs.y;
        let y = self.w * rhs.y - self.x * rhs.z + self.y * rhs.w + self.z * rhs.x;
        let z = self.w * rhs.z + self.x * rhs.y - self.y * rhs.x + self.z * rhs.w;
        let q = Self { w, x, y, z };
        let n2 = w * w + x * x + y * y + z * z;
        if (n2 - R::one()).abs() <= real::<R>(1e-12) {
            q
        } else {
            q.normalized().unwrap_or_else(Self::identity)
        }
    }

    /// Rotate a vector: q v q*.
    pub fn rotate(self, v: Vec3<R>) -> Vec3<R> {
        let qv = Vec3::new(self.x, self.y, self.z);
        let t = qv.cross(v) * real::<R>(2.0);
        v + t * self.w + qv.cross(t)
    }

    #[inline]
    pub fn dot(self, rhs: Self) -> R {
        self.w * rhs.w + self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    /// Spherical linear interpolation along the shorter arc.
    pub fn slerp(self, rhs: Self, t: R) -> Self {
        let mut b = rhs;
        let mut d = self.dot(rhs);
        if d < R::zero() {
            b = Self {
                w: -b.w,
                x: -b.x,
                y: -b.y,
                z: -b.z,
            };
            d = -d;
        }
        if d > real::<R>(0.9999995) {
            // nearly parallel: nlerp
            let q = Self {
                w: self.w + (b.w - self.w) * t,
                x: self.x + (b.x - self.x) * t,
                y: self.y + (b.y - self.y) * t,
                z: self.z + (b.z - self.z) * t,
            };
            return q.normalized().unwrap_or_else(Self::identity);
        }
        let theta = d.min(R::one()).acos();
        let sin_theta = theta.sin();
        let wa = ((R::one() - t) * theta).sin() / sin_theta;
        let wb = (t * theta).sin() / sin_theta;
        Self {
            w: self.w * wa + b.w * wb,
            x: self.x * wa + b.x * wb,
            y: self.y * wa + b.y * wb,
            z: self.z * wa + b.z * wb,
        }
        .normalized()
        .unwrap_or_else(Self::identity)
    }

    /// Row-major rotation matrix.
    pub fn to_matrix(self) -> [[R; 3]; 3] {
        let two = real::<R>(2.0);
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        [
            [
                R::one() - two * (y * y + z * z),
                two * (x * y - w * z),
                two * (x * z + w * y),
            ],
            [
                two * (x * y + w * z),
                R::one() - two * (x * x + z * z),
                two * (y * z - w * x),
            ],
            [
                two * (x * z - w * y),
                two * (y * z + w * x),
                R::one() - two * (x * x + y * y),
            ],
        ]
    }

    /// From a (proper) rotation matrix, Shepperd's method.
    pub fn from_matrix(m: [[R; 3]; 3]) -> Self {
        let tr = m[0][0] + m[1][1] + m[2][2];
        let half = real::<R>(0.5);
        let quarter = real::<R>(0.25);
        let q = if tr > R::zero() {
            let s = (tr + R::one()).sqrt() * real::<R>(2.0);
            Self {
                w: quarter * s,
                x: (m[2][1] - m[1][2]) / s,
                y: (m[0][2] - m[2][0]) / s,
                z: (m[1][0] - m[0][1]) / s,
            }
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (R::one() + m[0][0] - m[1][1] - m[2][2]).sqrt() * real::<R>(2.0);
            Self {
                w: (m[2][1] - m[1][2]) / s,
                x: quarter * s,
                y: (m[0][1] + m[1][0]) / s,
                z: (m[0][2] + m[2][0]) / s,
            }
        } else if m[1][1] > m[2][2] {
            let s = (R::one() + m[1][1] - m[0][0] - m[2][2]).sqrt() * real::<R>(2.0);
            Self {
                w: (m[0][2] - m[2][0]) / s,
                x: (m[0][1] + m[1][0]) / s,
                y: quarter * s,
                z: (m[1][2] + m[2][1]) / s,
            }
        } else {
            let s = (R::one() + m[2][2] - m[0][0] - m[1][1]).sqrt() * real::<R>(2.0);
            Self {
                w: (m[1][0] - m[0][1]) / s,
                x: (m[0][2] + m[2][0]) / s,
                y: (m[1][2] + m[2][1]) / s,
                z: quarter * s,
            }
        };
        let _ = half;
        q.normalized().unwrap_or_else(Self::identity)
    }

    /// Angle of the relative rotation to `rhs`, in radians.
    pub fn angle_to(self, rhs: Self) -> R {
        self.conjugate().mul(rhs).to_rotation_vector().norm()
    }
}

impl<R: Real> std::ops::Mul for Quat<R> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Quat::mul(self, rhs)
    }
}

/// An SE(3) pose: rotation followed by translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform<R> {
    pub rotation: Quat<R>,
    pub translation: Vec3<R>,
}

impl<R: Real> RigidTransform<R> {
    #[inline]
    pub fn identity() -> Self {
        Self {
            rotation: Quat::identity(),
            translation: Vec3::zero(),
        }
    }

    #[inline]
    pub fn new(rotation: Quat<R>, translation: Vec3<R>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    #[inline]
    pub fn from_rotation(rotation: Quat<R>) -> Self {
        Self {
            rotation,
            translation: Vec3::zero(),
        }
    }

    #[inline]
    pub fn from_translation(translation: Vec3<R>) -> Self {
        Self {
            rotation: Quat::identity(),
            translation,
        }
    }

    /// Apply to a point.
    #[inline]
    pub fn apply(&self, p: Vec3<R>) -> Vec3<R> {
        self.rotation.rotate(p) + self.translation
    }

    /// Apply to a direction (rotation only).
    #[inline]
    pub fn rotate_vector(&self, v: Vec3<R>) -> Vec3<R> {
        self.rotation.rotate(v)
    }

    /// `self . rhs`: apply `rhs` first, then `self`.
    pub fn compose(&self, rhs: &Self) -> Self {
        Self {
            rotation: self.rotation.mul(rhs.rotation),
            translation: self.rotation.rotate(rhs.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let inv_rot = self.rotation.conjugate();
        Self {
            rotation: inv_rot,
            translation: -(inv_rot.rotate(self.translation)),
        }
    }

    /// Exact bit-level identity check (used to short-circuit no-op transforms).
    pub fn is_identity_exact(&self) -> bool {
        self.rotation.w == R::one()
            && self.rotation.x == R::zero()
            && self.rotation.y == R::zero()
            && self.rotation.z == R::zero()
            && self.translation.x == R::zero()
            && self.translation.y == R::zero()
            && self.translation.z == R::zero()
    }

    /// Interpolate: linear translation, slerp rotation.
    pub fn interpolate(&self, other: &Self, t: R) -> Self {
        Self {
            rotation: self.rotation.slerp(other.rotation, t),
            translation: self.translation.lerp(other.translation, t),
        }
    }
}
