//! Exact rigid-body kinematics for all-revolute standard-DH chains.
//!
//! These routines are the ground truth every dataset label is computed from:
//! forward kinematics, finite-difference and geometric Jacobians in the world
//! and end-effector frames, and a damped-least-squares numerical IK.

mod ik;
mod jacobian;
mod pose;
mod robot;
mod rotation;

pub use ik::{ikine_multistart, ikine_num, ikine_num_masked, pose_error, IkMask, IkOptions, IkSolution, PoseError};
pub use jacobian::{jacob0, jacobe, jacobian_fd, JacobianMatrix, DEFAULT_FD_STEP};
pub use pose::Pose;
pub use robot::{
    fanuc_am120ib_10l, planar, puma560, DhLink, DynamicsParams, JointConfig, Manipulator, PUMA560_A, PUMA560_ALPHA,
    PUMA560_D,
};
pub use rotation::{skew, vex, vex_antisymmetric, Matrix3, Rotation, DEFAULT_SKEW_TOLERANCE};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not skew-symmetric (max |S + Sᵀ| = {deviation:e})")]
    NotSkewSymmetric { deviation: f64 },
    #[error("non-finite value produced while differencing")]
    NonFinite,
    #[error("damped normal matrix stayed singular after {retries} λ doublings")]
    SingularUpdate { retries: u32 },
    #[error("invalid manipulator: {0}")]
    InvalidManipulator(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
