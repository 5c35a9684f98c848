use alloc::vec;
use alloc::vec::Vec;

use super::robot::Manipulator;
use super::rotation::{mat_mul, mat_transpose, vex_antisymmetric, Matrix3};
use super::KinematicsError;
use crate::linalg::{cross, sub};

/// Default joint perturbation for [`jacobian_fd`].
pub const DEFAULT_FD_STEP: f64 = 1e-9;

/// `6×n` Jacobian with rows `(vx, vy, vz, ωx, ωy, ωz)`, stored row-major.
///
/// A matrix filled entirely with `+∞` is the "no solution" sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    cols: usize,
    data: Vec<f64>,
}

impl JacobianMatrix {
    pub fn zeros(cols: usize) -> Self {
        JacobianMatrix {
            cols,
            data: vec![0.0; 6 * cols],
        }
    }

    pub fn sentinel(cols: usize) -> Self {
        JacobianMatrix {
            cols,
            data: vec![f64::INFINITY; 6 * cols],
        }
    }

    pub fn from_row_major(cols: usize, data: Vec<f64>) -> Result<Self, KinematicsError> {
        if data.len() != 6 * cols {
            return Err(KinematicsError::DimensionMismatch {
                expected: 6 * cols,
                got: data.len(),
            });
        }
        Ok(JacobianMatrix { cols, data })
    }

    pub fn is_sentinel(&self) -> bool {
        self.data.iter().all(|&v| v == f64::INFINITY)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.cols + col] = v;
    }

    pub fn column(&self, col: usize) -> [f64; 6] {
        core::array::from_fn(|r| self.get(r, col))
    }

    fn set_column(&mut self, col: usize, v: [f64; 3], w: [f64; 3]) {
        for r in 0..3 {
            self.set(r, col, v[r]);
            self.set(r + 3, col, w[r]);
        }
    }

    /// Row-major flattening, `6·n` values.
    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs_diff(&self, other: &JacobianMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Finite-difference Jacobian in the world frame.
///
/// Column `i` is `[Δp/h ; vex(((R(q+h·eᵢ) − R(q))/h)·R(q)ᵀ)]`.
pub fn jacobian_fd(m: &Manipulator, q: &[f64], h: f64) -> Result<JacobianMatrix, KinematicsError> {
    if !(h > 0.0) {
        return Err(KinematicsError::InvalidArgument("step must be positive"));
    }
    let base = m.fkine(q)?;
    let rt = mat_transpose(base.rotation.matrix());
    let mut jac = JacobianMatrix::zeros(m.dof());
    let mut qp = q.to_vec();
    for i in 0..m.dof() {
        qp[i] = q[i] + h;
        let moved = m.fkine(&qp)?;
        qp[i] = q[i];
        let dp = sub(moved.translation, base.translation);
        let v = [dp[0] / h, dp[1] / h, dp[2] / h];
        let (r1, r0) = (moved.rotation.matrix(), base.rotation.matrix());
        let mut dr: Matrix3 = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                dr[a][b] = (r1[a][b] - r0[a][b]) / h;
            }
        }
        let w = vex_antisymmetric(&mat_mul(&dr, &rt));
        if !v.iter().chain(w.iter()).all(|x| x.is_finite()) {
            return Err(KinematicsError::NonFinite);
        }
        jac.set_column(i, v, w);
    }
    Ok(jac)
}

/// Geometric Jacobian in the world frame: column `i` is `[zᵢ × (pₑ − oᵢ) ; zᵢ]`
/// where `zᵢ, oᵢ` are the axis and origin of the frame preceding joint `i+1`.
pub fn jacob0(m: &Manipulator, q: &[f64]) -> Result<JacobianMatrix, KinematicsError> {
    let frames = m.frames(q)?;
    let pe = frames[m.dof()].translation;
    let mut jac = JacobianMatrix::zeros(m.dof());
    for (i, f) in frames.iter().take(m.dof()).enumerate() {
        let z = f.rotation.column(2);
        jac.set_column(i, cross(z, sub(pe, f.translation)), z);
    }
    Ok(jac)
}

/// Jacobian in the end-effector frame: `block-diag(Rᵀ, Rᵀ)·jacob0`.
pub fn jacobe(m: &Manipulator, q: &[f64]) -> Result<JacobianMatrix, KinematicsError> {
    let j0 = jacob0(m, q)?;
    let rt = m.fkine(q)?.rotation.transpose();
    let mut je = JacobianMatrix::zeros(m.dof());
    for c in 0..m.dof() {
        let col = j0.column(c);
        let v = rt.apply([col[0], col[1], col[2]]);
        let w = rt.apply([col[3], col[4], col[5]]);
        je.set_column(c, v, w);
    }
    Ok(je)
}
