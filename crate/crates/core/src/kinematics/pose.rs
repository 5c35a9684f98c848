use core::ops::Mul;

use super::rotation::Rotation;
use crate::linalg::{add, Vec3};

/// Rigid transform in SE(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Rotation,
    /// Meters.
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        rotation: Rotation::IDENTITY,
        translation: [0.0; 3],
    };

    pub fn new(rotation: Rotation, translation: Vec3) -> Self {
        Pose { rotation, translation }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Pose {
            rotation: Rotation::IDENTITY,
            translation,
        }
    }

    /// Pose from a position and roll-pitch-yaw angles.
    pub fn from_position_rpy(position: Vec3, rpy: [f64; 3]) -> Self {
        Pose::new(Rotation::from_rpy(rpy[0], rpy[1], rpy[2]), position)
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        let t = rt.apply(self.translation);
        Pose::new(rt, [-t[0], -t[1], -t[2]])
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        add(self.rotation.apply(p), self.translation)
    }

    /// Homogeneous 4×4 form with bottom row `[0 0 0 1]`.
    pub fn to_homogeneous(&self) -> [[f64; 4]; 4] {
        let r = self.rotation.matrix();
        let t = self.translation;
        [
            [r[0][0], r[0][1], r[0][2], t[0]],
            [r[1][0], r[1][1], r[1][2], t[1]],
            [r[2][0], r[2][1], r[2][2], t[2]],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        Pose::new(
            self.rotation * rhs.rotation,
            add(self.rotation.apply(rhs.translation), self.translation),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pose_strategy() -> impl Strategy<Value = Pose> {
        (prop::array::uniform3(0.0f64..6.2), prop::array::uniform3(-2.0f64..2.0))
            .prop_map(|(rpy, t)| Pose::from_position_rpy(t, rpy))
    }

    fn close(a: &Pose, b: &Pose, tol: f64) -> bool {
        let (ha, hb) = (a.to_homogeneous(), b.to_homogeneous());
        (0..4).all(|i| (0..4).all(|j| (ha[i][j] - hb[i][j]).abs() <= tol))
    }

    proptest! {
        #[test]
        fn composition_is_associative(a in pose_strategy(), b in pose_strategy(), c in pose_strategy()) {
            prop_assert!(close(&((a * b) * c), &(a * (b * c)), 1e-12));
        }

        #[test]
        fn identity_is_neutral(a in pose_strategy()) {
            prop_assert_eq!(a * Pose::IDENTITY, a);
            prop_assert!(close(&(a * a.inverse()), &Pose::IDENTITY, 1e-12));
        }
    }
}
