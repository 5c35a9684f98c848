use alloc::vec::Vec;

use rand::Rng;

use super::jacobian::jacob0;
use super::pose::Pose;
use super::robot::{JointConfig, Manipulator};
use super::rotation::{mat_mul, mat_transpose, vex_antisymmetric};
use super::KinematicsError;
use crate::linalg::{cholesky_in_place, cholesky_solve, norm_slice, sub};
use crate::math::{sqrt, TAU};

/// Pose error `[Δp ; vex(antisym(R_t·R_cᵀ))]` from `current` to `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseError {
    pub twist: [f64; 6],
    /// `trace(R_t·R_cᵀ)`; 3 when orientations agree, −1 at a half turn.
    pub rotation_trace: f64,
}

impl PoseError {
    /// Set when the orientation error is at or beyond 90°, where the vex
    /// term shrinks again and no longer measures the error.
    pub fn half_turn(&self) -> bool {
        self.rotation_trace <= 1.0
    }

    pub fn norm(&self) -> f64 {
        norm_slice(&self.twist)
    }

    fn translation_sq(&self) -> f64 {
        self.twist[..3].iter().map(|v| v * v).sum()
    }

    /// Residual used by the solver: translation error combined with the
    /// chordal orientation distance `2·sin(θ/2) = √(3 − tr)`. It agrees with
    /// [`PoseError::norm`] to first order and stays monotone in the angle.
    pub fn residual(&self, mask: IkMask) -> f64 {
        match mask {
            IkMask::PositionOnly => sqrt(self.translation_sq()),
            IkMask::Full => sqrt(self.translation_sq() + (3.0 - self.rotation_trace).max(0.0)),
        }
    }
}

pub fn pose_error(current: &Pose, target: &Pose) -> PoseError {
    let dp = sub(target.translation, current.translation);
    let re = mat_mul(target.rotation.matrix(), &mat_transpose(current.rotation.matrix()));
    let w = vex_antisymmetric(&re);
    PoseError {
        twist: [dp[0], dp[1], dp[2], w[0], w[1], w[2]],
        rotation_trace: re[0][0] + re[1][1] + re[2][2],
    }
}

/// Which error components the solver drives to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IkMask {
    #[default]
    Full,
    /// Position only; the orientation is free.
    PositionOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkOptions {
    pub plim: usize,
    pub cutoff: f64,
    pub lambda: f64,
    /// Random starts tried after the zero configuration.
    pub restarts: usize,
    pub mask: IkMask,
}

impl Default for IkOptions {
    fn default() -> Self {
        IkOptions {
            plim: 50,
            cutoff: 0.03,
            lambda: 0.1,
            restarts: 8,
            mask: IkMask::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkSolution {
    pub q: JointConfig,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
    /// Residual after every accepted step, starting with the initial guess.
    pub residual_log: Vec<f64>,
}

const SINGULAR_RETRIES: u32 = 8;
const LAMBDA_MIN: f64 = 1e-9;
const LAMBDA_MAX: f64 = 1e9;

/// Damped-least-squares IK from `q0`.
///
/// Each step solves `(JᵀJ + λI)·Δq = Jᵀe`. Steps that do not lower the
/// residual are rejected and λ is raised; accepted steps lower λ.
pub fn ikine_num(
    m: &Manipulator,
    target: &Pose,
    q0: &[f64],
    plim: usize,
    cutoff: f64,
    lambda: f64,
) -> Result<IkSolution, KinematicsError> {
    ikine_num_masked(m, target, q0, plim, cutoff, lambda, IkMask::Full)
}

pub fn ikine_num_masked(
    m: &Manipulator,
    target: &Pose,
    q0: &[f64],
    plim: usize,
    cutoff: f64,
    lambda: f64,
    mask: IkMask,
) -> Result<IkSolution, KinematicsError> {
    if plim < 1 {
        return Err(KinematicsError::InvalidArgument("plim must be at least 1"));
    }
    if !(cutoff > 0.0) {
        return Err(KinematicsError::InvalidArgument("cutoff must be positive"));
    }
    if !(lambda > 0.0) {
        return Err(KinematicsError::InvalidArgument("lambda must be positive"));
    }
    m.check_dims(q0)?;
    let n = m.dof();
    let rows = match mask {
        IkMask::Full => 6,
        IkMask::PositionOnly => 3,
    };

    let mut q = q0.to_vec();
    let mut err = pose_error(&m.fkine(&q)?, target);
    let mut residual = err.residual(mask);
    let mut log = alloc::vec![residual];
    let mut lam = lambda;
    let mut iterations = 0;
    let mut normal = alloc::vec![0.0; n * n];
    let mut rhs = alloc::vec![0.0; n];
    let mut trial = alloc::vec![0.0; n];

    while residual >= cutoff && iterations < plim {
        iterations += 1;
        let jac = jacob0(m, &q)?;
        for i in 0..n {
            rhs[i] = (0..rows).map(|r| jac.get(r, i) * err.twist[r]).sum();
            for k in 0..n {
                normal[i * n + k] = (0..rows).map(|r| jac.get(r, i) * jac.get(r, k)).sum();
            }
        }
        let mut retries = 0;
        let step = loop {
            let mut a = normal.clone();
            for i in 0..n {
                a[i * n + i] += lam;
            }
            if cholesky_in_place(&mut a, n) {
                let mut dq = rhs.clone();
                cholesky_solve(&a, n, &mut dq);
                break dq;
            }
            if retries == SINGULAR_RETRIES {
                return Err(KinematicsError::SingularUpdate { retries });
            }
            retries += 1;
            lam *= 2.0;
        };
        for i in 0..n {
            trial[i] = q[i] + step[i];
        }
        if !trial.iter().all(|v| v.is_finite()) {
            return Err(KinematicsError::NonFinite);
        }
        let trial_err = pose_error(&m.fkine(&trial)?, target);
        let trial_residual = trial_err.residual(mask);
        if trial_residual < residual {
            q.copy_from_slice(&trial);
            err = trial_err;
            residual = trial_residual;
            log.push(residual);
            lam = (lam * 0.5).max(LAMBDA_MIN);
        } else {
            lam = (lam * 4.0).min(LAMBDA_MAX);
        }
    }

    Ok(IkSolution {
        q: JointConfig(q),
        converged: residual < cutoff,
        residual,
        iterations,
        residual_log: log,
    })
}

/// IK from the zero configuration, then from `opts.restarts` uniform random
/// starts in `[0, 2π)ⁿ`; returns the first converged solution, otherwise the
/// one with the smallest residual.
pub fn ikine_multistart<R: Rng + ?Sized>(
    m: &Manipulator,
    target: &Pose,
    opts: &IkOptions,
    rng: &mut R,
) -> Result<IkSolution, KinematicsError> {
    let n = m.dof();
    let mut best: Option<IkSolution> = None;
    let mut q0 = alloc::vec![0.0; n];
    for attempt in 0..=opts.restarts {
        if attempt > 0 {
            for v in q0.iter_mut() {
                *v = rng.random_range(0.0..TAU);
            }
        }
        let sol = ikine_num_masked(m, target, &q0, opts.plim, opts.cutoff, opts.lambda, opts.mask)?;
        if sol.converged {
            return Ok(sol);
        }
        if best.as_ref().map_or(true, |b| sol.residual < b.residual) {
            best = Some(sol);
        }
    }
    Ok(best.expect("at least one attempt is made"))
}
