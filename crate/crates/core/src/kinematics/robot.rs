use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use super::pose::Pose;
use super::rotation::Rotation;
use super::KinematicsError;
use crate::math::{cos, sin, wrap_angle, FRAC_PI_2, PI};

/// Joint angles in radians, one per link.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JointConfig(pub Vec<f64>);

impl JointConfig {
    pub fn zeros(n: usize) -> Self {
        JointConfig(alloc::vec![0.0; n])
    }

    /// Copy with every angle wrapped into `[0, 2π)`.
    pub fn normalized(&self) -> JointConfig {
        JointConfig(self.0.iter().map(|&q| wrap_angle(q)).collect())
    }
}

impl From<Vec<f64>> for JointConfig {
    fn from(v: Vec<f64>) -> Self {
        JointConfig(v)
    }
}

impl From<&[f64]> for JointConfig {
    fn from(v: &[f64]) -> Self {
        JointConfig(v.to_vec())
    }
}

impl Deref for JointConfig {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for JointConfig {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// One revolute joint in standard Denavit-Hartenberg form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhLink {
    pub d: f64,
    pub a: f64,
    pub alpha: f64,
    pub theta_offset: f64,
}

impl DhLink {
    pub const fn new(d: f64, a: f64, alpha: f64) -> Self {
        DhLink {
            d,
            a,
            alpha,
            theta_offset: 0.0,
        }
    }

    /// `Rz(θ)·Tz(d)·Tx(a)·Rx(α)` with `θ = q + theta_offset`.
    pub fn transform(&self, q: f64) -> Pose {
        let theta = q + self.theta_offset;
        let (st, ct) = (sin(theta), cos(theta));
        let (sa, ca) = (sin(self.alpha), cos(self.alpha));
        Pose::new(
            Rotation::from_matrix_unchecked([[ct, -st * ca, st * sa], [st, ct * ca, -ct * sa], [0.0, sa, ca]]),
            [self.a * ct, self.a * st, self.d],
        )
    }

    fn is_finite(&self) -> bool {
        self.d.is_finite() && self.a.is_finite() && self.alpha.is_finite() && self.theta_offset.is_finite()
    }
}

/// Per-link dynamics; only ever sampled as features, never simulated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DynamicsParams {
    /// kg
    pub m: f64,
    /// center of mass, m
    pub r: [f64; 3],
    /// diagonal inertia, kg·m²
    pub i_diag: [f64; 3],
    /// viscous friction
    pub b: f64,
    /// Coulomb friction (positive, negative)
    pub tc: [f64; 2],
    /// gear ratio
    pub g: f64,
    /// motor inertia
    pub jm: f64,
}

impl DynamicsParams {
    pub fn is_valid(&self) -> bool {
        let finite = [self.m, self.b, self.g, self.jm]
            .iter()
            .chain(self.r.iter())
            .chain(self.i_diag.iter())
            .chain(self.tc.iter())
            .all(|v| v.is_finite());
        finite
            && self.m >= 0.0
            && self.i_diag.iter().all(|&v| v >= 0.0)
            && self.b >= 0.0
            && self.tc[0] >= 0.0
            && self.tc[1] <= 0.0
            && self.jm >= 0.0
    }
}

/// All-revolute serial chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Manipulator {
    links: Vec<DhLink>,
    dynamics: Option<Vec<DynamicsParams>>,
}

impl Manipulator {
    pub fn new(links: Vec<DhLink>, dynamics: Option<Vec<DynamicsParams>>) -> Result<Self, KinematicsError> {
        if links.is_empty() {
            return Err(KinematicsError::InvalidManipulator("chain has no links"));
        }
        if !links.iter().all(DhLink::is_finite) {
            return Err(KinematicsError::InvalidManipulator("non-finite DH parameter"));
        }
        if let Some(dy) = &dynamics {
            if dy.len() != links.len() {
                return Err(KinematicsError::DimensionMismatch {
                    expected: links.len(),
                    got: dy.len(),
                });
            }
            if !dy.iter().all(DynamicsParams::is_valid) {
                return Err(KinematicsError::InvalidManipulator(
                    "dynamics parameter outside its physical range",
                ));
            }
        }
        Ok(Manipulator { links, dynamics })
    }

    pub fn from_links(links: Vec<DhLink>) -> Result<Self, KinematicsError> {
        Self::new(links, None)
    }

    pub fn links(&self) -> &[DhLink] {
        &self.links
    }

    pub fn dynamics(&self) -> Option<&[DynamicsParams]> {
        self.dynamics.as_deref()
    }

    pub fn dof(&self) -> usize {
        self.links.len()
    }

    /// Sum of `|a| + |d|` over links; no end-effector can be farther from the base.
    pub fn reach_bound(&self) -> f64 {
        self.links.iter().map(|l| l.a.abs() + l.d.abs()).sum()
    }

    pub(crate) fn check_dims(&self, q: &[f64]) -> Result<(), KinematicsError> {
        if q.len() != self.links.len() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.links.len(),
                got: q.len(),
            });
        }
        Ok(())
    }

    /// End-effector pose: left-to-right product of the link transforms.
    pub fn fkine(&self, q: &[f64]) -> Result<Pose, KinematicsError> {
        self.check_dims(q)?;
        Ok(self
            .links
            .iter()
            .zip(q)
            .fold(Pose::IDENTITY, |t, (l, &qi)| t * l.transform(qi)))
    }

    /// Frames `T_0 = I, T_1, …, T_n` of every joint along the chain.
    pub fn frames(&self, q: &[f64]) -> Result<Vec<Pose>, KinematicsError> {
        self.check_dims(q)?;
        let mut out = Vec::with_capacity(self.links.len() + 1);
        let mut t = Pose::IDENTITY;
        out.push(t);
        for (l, &qi) in self.links.iter().zip(q) {
            t = t * l.transform(qi);
            out.push(t);
        }
        Ok(out)
    }
}

/// Standard-DH PUMA 560 constants `(d, a, α)`; the free entries of the
/// sampled family are `d₃, d₄, a₂, a₃`.
pub const PUMA560_D: [f64; 6] = [0.0, 0.0, 0.15005, 0.4318, 0.0, 0.0];
pub const PUMA560_A: [f64; 6] = [0.0, 0.4318, 0.0203, 0.0, 0.0, 0.0];
pub const PUMA560_ALPHA: [f64; 6] = [FRAC_PI_2, 0.0, -FRAC_PI_2, FRAC_PI_2, -FRAC_PI_2, 0.0];

pub fn puma560() -> Manipulator {
    let links = (0..6)
        .map(|i| DhLink::new(PUMA560_D[i], PUMA560_A[i], PUMA560_ALPHA[i]))
        .collect();
    Manipulator::from_links(links).expect("PUMA 560 template is valid")
}

/// Fanuc AM120iB/10L in standard DH, after the Robotics Toolbox
/// `mdl_fanuc10L` model. The last twist is taken as 0 so that the zero
/// configuration has identity orientation at `(1.02, 0, −1.06)`.
pub fn fanuc_am120ib_10l() -> Manipulator {
    let links = alloc::vec![
        DhLink::new(0.0, 0.15, -FRAC_PI_2),
        DhLink::new(0.0, 0.77, PI),
        DhLink::new(0.0, 0.10, -FRAC_PI_2),
        DhLink::new(-0.96, 0.0, FRAC_PI_2),
        DhLink::new(0.0, 0.0, -FRAC_PI_2),
        DhLink::new(-0.10, 0.0, 0.0),
    ];
    Manipulator::from_links(links).expect("Fanuc template is valid")
}

/// Planar arm in the x-y plane with the given link lengths.
pub fn planar(lengths: &[f64]) -> Result<Manipulator, KinematicsError> {
    Manipulator::from_links(lengths.iter().map(|&a| DhLink::new(0.0, a, 0.0)).collect())
}
