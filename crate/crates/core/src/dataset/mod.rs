//! Random manipulator/pose sampling, IK-based labels and the dataset
//! feature layouts.

mod layout;
mod sample;

pub use layout::*;
pub use sample::{
    label_confidence, label_jacobian, nnsample, rand_dyna, rand_kine, rand_kine_in, rand_pose, sample_row,
    solve_target, split_rows, test_count, LabeledRow,
};

use alloc::string::String;
use core::fmt;
use core::str::FromStr;
use thiserror::Error;

use crate::kinematics::{IkMask, KinematicsError};
use crate::nn::{NnError, Tensor};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("feature rows must have 24 or 96 columns, got {0}")]
    BadWidth(usize),
    #[error("only 6-link chains are supported, got {0}")]
    UnsupportedDof(usize),
    #[error("dynamic layout requested for a manipulator without dynamics")]
    MissingDynamics,
    #[error("invalid sampling options: {0}")]
    InvalidOptions(&'static str),
    #[error("unknown dataset variant `{0}`")]
    UnknownVariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Reachability label, 24 kinematic features.
    ConfKine,
    /// Reachability label, 96 features including dynamics.
    ConfDyna,
    /// End-effector-frame Jacobian, 96 features.
    JacobE,
    /// World-frame Jacobian, 96 features.
    Jacob0,
}

/// Frame a Jacobian label is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    World,
    EndEffector,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::ConfKine, Variant::ConfDyna, Variant::JacobE, Variant::Jacob0];

    pub fn name(self) -> &'static str {
        match self {
            Variant::ConfKine => "conf-kine",
            Variant::ConfDyna => "conf-dyna",
            Variant::JacobE => "jacob-e",
            Variant::Jacob0 => "jacob-0",
        }
    }

    pub fn is_dynamic(self) -> bool {
        !matches!(self, Variant::ConfKine)
    }

    pub fn is_confidence(self) -> bool {
        matches!(self, Variant::ConfKine | Variant::ConfDyna)
    }

    pub fn frame(self) -> Option<Frame> {
        match self {
            Variant::JacobE => Some(Frame::EndEffector),
            Variant::Jacob0 => Some(Frame::World),
            _ => None,
        }
    }

    pub fn feature_width(self) -> usize {
        feature_width(self.is_dynamic())
    }

    pub fn target_width(self) -> usize {
        if self.is_confidence() {
            1
        } else {
            6 * DOF
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == norm || v.name().replace('-', "") == norm)
            .ok_or_else(|| DatasetError::UnknownVariant(String::from(s)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOptions {
    pub variant: Variant,
    pub dof: usize,
    pub pose_position_range: (f64, f64),
    pub dh_free_range: (f64, f64),
    pub plim: usize,
    pub cutoff: f64,
    pub lambda: f64,
    /// Random IK starts after the zero configuration.
    pub restarts: usize,
    pub mask: IkMask,
    pub test_ratio: f64,
    pub seed: u64,
    /// Consumed by the parallel driver; serial and parallel output are identical.
    pub parallel: bool,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            variant: Variant::ConfKine,
            dof: DOF,
            pose_position_range: POSITION_RANGE,
            dh_free_range: FREE_RANGE,
            plim: 50,
            cutoff: 0.03,
            lambda: 0.1,
            restarts: 8,
            mask: IkMask::Full,
            test_ratio: 0.01,
            seed: 0,
            parallel: false,
        }
    }
}

impl SampleOptions {
    pub fn for_variant(variant: Variant) -> Self {
        SampleOptions {
            variant,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.dof != DOF {
            return Err(DatasetError::UnsupportedDof(self.dof));
        }
        if self.plim < 1 {
            return Err(DatasetError::InvalidOptions("plim must be at least 1"));
        }
        if !(self.cutoff > 0.0) || !(self.lambda > 0.0) {
            return Err(DatasetError::InvalidOptions("cutoff and lambda must be positive"));
        }
        if !(self.test_ratio > 0.0 && self.test_ratio < 1.0) {
            return Err(DatasetError::InvalidOptions("test ratio must lie in (0, 1)"));
        }
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 < r.1;
        if !ok(self.pose_position_range) || !ok(self.dh_free_range) {
            return Err(DatasetError::InvalidOptions(
                "sampling ranges must be finite with lo < hi",
            ));
        }
        Ok(())
    }

    pub fn ik_options(&self) -> crate::kinematics::IkOptions {
        crate::kinematics::IkOptions {
            plim: self.plim,
            cutoff: self.cutoff,
            lambda: self.lambda,
            restarts: self.restarts,
            mask: self.mask,
        }
    }
}

/// Feature and label matrices of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub variant: Variant,
    pub features: Tensor,
    pub labels: Tensor,
}

impl DatasetFile {
    /// Features must have the variant's width, or the 24-column kinematic
    /// layout (a projected dynamic file).
    pub fn new(variant: Variant, features: Tensor, labels: Tensor) -> Result<Self, DatasetError> {
        if features.cols() != variant.feature_width() && features.cols() != KINEMATIC_WIDTH {
            return Err(DatasetError::BadWidth(features.cols()));
        }
        if labels.cols() != variant.target_width() || labels.rows() != features.rows() {
            return Err(NnError::ShapeMismatch(alloc::format!(
                "{} labels of width {} for {} rows of variant {variant}",
                labels.rows(),
                labels.cols(),
                features.rows()
            ))
            .into());
        }
        Ok(DatasetFile {
            variant,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows whose label is the no-solution sentinel (or 0 for confidence data).
    pub fn negatives(&self) -> usize {
        self.labels
            .iter_rows()
            .filter(|r| {
                if self.variant.is_confidence() {
                    r[0] == 0.0
                } else {
                    r.iter().any(|v| v.is_infinite())
                }
            })
            .count()
    }

    /// Same rows with the dynamics columns dropped.
    pub fn project_kinematic(&self) -> Result<DatasetFile, DatasetError> {
        let mut data = alloc::vec::Vec::with_capacity(self.len() * KINEMATIC_WIDTH);
        for row in self.features.iter_rows() {
            data.extend(project_kinematic(row)?);
        }
        let features = Tensor::matrix(self.len(), KINEMATIC_WIDTH, data)?;
        DatasetFile::new(self.variant, features, self.labels.clone())
    }

    /// Fraction of rows with a solution.
    pub fn positive_ratio(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        1.0 - self.negatives() as f64 / self.len() as f64
    }
}
