use core::ops::Mul;

use super::KinematicsError;
use crate::linalg::Vec3;
use crate::math::{asin, atan2, cos, sin, wrap_angle};

pub type Matrix3 = [[f64; 3]; 3];

/// Default antisymmetry tolerance accepted by [`vex`].
pub const DEFAULT_SKEW_TOLERANCE: f64 = 1e-8;

/// Skew-symmetric matrix `S(w)` with `S(w)·x = w × x`.
pub fn skew(w: Vec3) -> Matrix3 {
    [[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]]
}

/// Inverse of [`skew`] for matrices that are antisymmetric within `tolerance`.
pub fn vex(s: &Matrix3, tolerance: f64) -> Result<Vec3, KinematicsError> {
    let mut deviation: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            deviation = deviation.max((s[i][j] + s[j][i]).abs());
        }
    }
    if !(deviation <= tolerance) {
        return Err(KinematicsError::NotSkewSymmetric { deviation });
    }
    Ok(vex_antisymmetric(s))
}

/// `vex` of the antisymmetric part `(S − Sᵀ)/2`; never fails.
pub fn vex_antisymmetric(s: &Matrix3) -> Vec3 {
    [
        0.5 * (s[2][1] - s[1][2]),
        0.5 * (s[0][2] - s[2][0]),
        0.5 * (s[1][0] - s[0][1]),
    ]
}

pub(crate) fn mat_mul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub(crate) fn mat_transpose(a: &Matrix3) -> Matrix3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// Element of SO(3), stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3);

impl Rotation {
    pub const IDENTITY: Rotation = Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Accepts `m` if `m·mᵀ = I` and `det m = 1` within `1e-10`.
    pub fn from_matrix(m: Matrix3) -> Result<Self, KinematicsError> {
        let r = Rotation(m);
        if r.is_valid(1e-10) {
            Ok(r)
        } else {
            Err(KinematicsError::InvalidArgument("matrix is not a rotation"))
        }
    }

    /// Wraps `m` without checking; used for products of rotations.
    pub const fn from_matrix_unchecked(m: Matrix3) -> Self {
        Rotation(m)
    }

    pub fn rx(t: f64) -> Self {
        let (s, c) = (sin(t), cos(t));
        Rotation([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    pub fn ry(t: f64) -> Self {
        let (s, c) = (sin(t), cos(t));
        Rotation([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    }

    pub fn rz(t: f64) -> Self {
        let (s, c) = (sin(t), cos(t));
        Rotation([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Roll-pitch-yaw: `Rz(yaw)·Ry(pitch)·Rx(roll)`.
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        Rotation::rz(yaw) * Rotation::ry(pitch) * Rotation::rx(roll)
    }

    /// Inverse of [`Rotation::from_rpy`], each angle wrapped into `[0, 2π)`.
    pub fn to_rpy(&self) -> [f64; 3] {
        let m = &self.0;
        let pitch = asin((-m[2][0]).clamp(-1.0, 1.0));
        let (roll, yaw) = if m[2][0].abs() < 1.0 - 1e-12 {
            (atan2(m[2][1], m[2][2]), atan2(m[1][0], m[0][0]))
        } else {
            // gimbal lock: fold everything into yaw
            (0.0, atan2(-m[0][1], m[1][1]))
        };
        [wrap_angle(roll), wrap_angle(pitch), wrap_angle(yaw)]
    }

    pub fn matrix(&self) -> &Matrix3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(mat_transpose(&self.0))
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn column(&self, j: usize) -> Vec3 {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let p = mat_mul(&self.0, &mat_transpose(&self.0));
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                if !((p[i][j] - target).abs() <= tol) {
                    return false;
                }
            }
        }
        (self.determinant() - 1.0).abs() <= tol
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(mat_mul(&self.0, &rhs.0))
    }
}
