//! Algorithmic core for learning manipulator workspaces.
//!
//! Everything here is `no_std` (with `alloc`): exact serial-link kinematics
//! used as the labeling oracle, random manipulator/pose sampling with the
//! fixed feature layouts, discretized workspace generation, a small dense
//! neural-network engine, the shared-encoder confidence/estimation model,
//! and the benchmark metrics.
//!
//! File formats, parallel drivers, wall-clock timing and the command line
//! live in the `jacobnet` crate.

#![cfg_attr(not(test), no_std)]
// Index loops mirror the matrix notation; `!(x > y)` comparisons reject NaN on purpose.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dataset;
pub mod kinematics;
pub mod linalg;
pub mod math;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod rng;
pub mod workspace;

pub use kinematics::{
    DhLink, DynamicsParams, JacobianMatrix, JointConfig, KinematicsError, Manipulator, Pose, Rotation,
};
pub use nn::Tensor;
