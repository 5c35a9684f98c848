//! Column layout of feature rows.
//!
//! Kinematic rows (24 columns): `[d₁…d₆, a₁…a₆, α₁…α₆, x, y, z, roll, pitch, yaw]`.
//! Dynamic rows (96 columns) insert the per-link dynamics between the DH
//! block and the pose: `m` 18–23, `r` 24–41, `I` 42–59, `B` 60–65,
//! `Tc` 66–77 as (positive, negative) pairs, `G` 78–83, `Jm` 84–89,
//! position 90–92, orientation 93–95.

use alloc::vec::Vec;

use super::DatasetError;
use crate::kinematics::{DhLink, DynamicsParams, Manipulator, Pose, Rotation, PUMA560_A, PUMA560_ALPHA, PUMA560_D};
use crate::math::TAU;

pub const DOF: usize = 6;
pub const KINEMATIC_WIDTH: usize = 24;
pub const DYNAMIC_WIDTH: usize = 96;
pub const DH_WIDTH: usize = 18;

/// Sampled DH columns: `d₃, d₄, a₂, a₃`.
pub const FREE_COLUMNS: [usize; 4] = [2, 3, 7, 8];
/// DH columns fixed to the template for every sample.
pub const CONSTANT_COLUMNS: [usize; 14] = [0, 1, 4, 5, 6, 9, 10, 11, 12, 13, 14, 15, 16, 17];

pub const FREE_RANGE: (f64, f64) = (0.0, 0.5);
pub const MASS_RANGE: (f64, f64) = (0.0, 10.0);
pub const COM_RANGE: (f64, f64) = (-0.05, 0.05);
pub const INERTIA_RANGE: (f64, f64) = (0.0, 1.0);
pub const VISCOUS_RANGE: (f64, f64) = (0.0, 0.005);
pub const COULOMB_POS_RANGE: (f64, f64) = (0.0, 0.5);
pub const COULOMB_NEG_RANGE: (f64, f64) = (-0.5, 0.0);
pub const GEAR_RANGE: (f64, f64) = (-50.0, 50.0);
pub const MOTOR_INERTIA_RANGE: (f64, f64) = (0.0, 5e-4);
pub const POSITION_RANGE: (f64, f64) = (-0.4, 0.4);
pub const ORIENTATION_RANGE: (f64, f64) = (0.0, TAU);

const M_START: usize = 18;
const R_START: usize = 24;
const I_START: usize = 42;
const B_START: usize = 60;
const TC_START: usize = 66;
const G_START: usize = 78;
const JM_START: usize = 84;

/// Template value of a DH column (the PUMA 560 constants).
pub fn template_value(col: usize) -> f64 {
    match col {
        0..=5 => PUMA560_D[col],
        6..=11 => PUMA560_A[col - 6],
        12..=17 => PUMA560_ALPHA[col - 12],
        _ => panic!("column {col} is not a DH column"),
    }
}

/// Feature width: 24 without dynamics, 96 with.
pub fn feature_width(dynamic: bool) -> usize {
    if dynamic {
        DYNAMIC_WIDTH
    } else {
        KINEMATIC_WIDTH
    }
}

fn pose_start(width: usize) -> usize {
    width - 6
}

/// Declared range of a feature column, or `None` for constant DH columns.
pub fn column_range(width: usize, col: usize) -> Option<(f64, f64)> {
    let ps = pose_start(width);
    if col < DH_WIDTH {
        return FREE_COLUMNS.contains(&col).then_some(FREE_RANGE);
    }
    if col >= ps {
        return Some(if col < ps + 3 {
            POSITION_RANGE
        } else {
            ORIENTATION_RANGE
        });
    }
    Some(match col {
        M_START..R_START => MASS_RANGE,
        R_START..I_START => COM_RANGE,
        I_START..B_START => INERTIA_RANGE,
        B_START..TC_START => VISCOUS_RANGE,
        TC_START..G_START if (col - TC_START) % 2 == 0 => COULOMB_POS_RANGE,
        TC_START..G_START => COULOMB_NEG_RANGE,
        G_START..JM_START => GEAR_RANGE,
        _ => MOTOR_INERTIA_RANGE,
    })
}

/// Feature row for a 6-link manipulator at a pose given by position and RPY.
/// Dynamic rows require the manipulator to carry dynamics.
pub fn encode(m: &Manipulator, position: [f64; 3], rpy: [f64; 3], dynamic: bool) -> Result<Vec<f64>, DatasetError> {
    if m.dof() != DOF {
        return Err(DatasetError::UnsupportedDof(m.dof()));
    }
    let width = feature_width(dynamic);
    let mut row = alloc::vec![0.0; width];
    for (i, l) in m.links().iter().enumerate() {
        row[i] = l.d;
        row[6 + i] = l.a;
        row[12 + i] = l.alpha;
    }
    if dynamic {
        let dy = m.dynamics().ok_or(DatasetError::MissingDynamics)?;
        for (i, p) in dy.iter().enumerate() {
            row[M_START + i] = p.m;
            row[R_START + 3 * i..R_START + 3 * i + 3].copy_from_slice(&p.r);
            row[I_START + 3 * i..I_START + 3 * i + 3].copy_from_slice(&p.i_diag);
            row[B_START + i] = p.b;
            row[TC_START + 2 * i..TC_START + 2 * i + 2].copy_from_slice(&p.tc);
            row[G_START + i] = p.g;
            row[JM_START + i] = p.jm;
        }
    }
    let ps = pose_start(width);
    row[ps..ps + 3].copy_from_slice(&position);
    row[ps + 3..].copy_from_slice(&rpy);
    Ok(row)
}

/// Inverse of [`encode`]: the manipulator and target pose a row describes.
pub fn decode(row: &[f64]) -> Result<(Manipulator, Pose), DatasetError> {
    let dynamic = match row.len() {
        KINEMATIC_WIDTH => false,
        DYNAMIC_WIDTH => true,
        n => return Err(DatasetError::BadWidth(n)),
    };
    let links = (0..DOF).map(|i| DhLink::new(row[i], row[6 + i], row[12 + i])).collect();
    let dynamics = dynamic.then(|| {
        (0..DOF)
            .map(|i| DynamicsParams {
                m: row[M_START + i],
                r: [row[R_START + 3 * i], row[R_START + 3 * i + 1], row[R_START + 3 * i + 2]],
                i_diag: [row[I_START + 3 * i], row[I_START + 3 * i + 1], row[I_START + 3 * i + 2]],
                b: row[B_START + i],
                tc: [row[TC_START + 2 * i], row[TC_START + 2 * i + 1]],
                g: row[G_START + i],
                jm: row[JM_START + i],
            })
            .collect()
    });
    let m = Manipulator::new(links, dynamics)?;
    Ok((m, pose_of(row)))
}

/// Target pose stored in the last six columns of a feature row.
pub fn pose_of(row: &[f64]) -> Pose {
    let ps = row.len() - 6;
    let position = [row[ps], row[ps + 1], row[ps + 2]];
    Pose::new(Rotation::from_rpy(row[ps + 3], row[ps + 4], row[ps + 5]), position)
}

/// Drops the dynamics columns of a 96-column row, leaving the 24-column layout.
pub fn project_kinematic(row: &[f64]) -> Result<Vec<f64>, DatasetError> {
    match row.len() {
        KINEMATIC_WIDTH => Ok(row.to_vec()),
        DYNAMIC_WIDTH => {
            let mut out = Vec::with_capacity(KINEMATIC_WIDTH);
            out.extend_from_slice(&row[..DH_WIDTH]);
            out.extend_from_slice(&row[DYNAMIC_WIDTH - 6..]);
            Ok(out)
        }
        n => Err(DatasetError::BadWidth(n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::puma560;

    #[test]
    fn free_and_constant_columns_partition_dh_block() {
        let mut all: Vec<usize> = FREE_COLUMNS.iter().chain(CONSTANT_COLUMNS.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..DH_WIDTH).collect::<Vec<_>>());
    }

    #[test]
    fn template_matches_puma() {
        let row = encode(&puma560(), [0.0; 3], [0.0; 3], false).unwrap();
        for c in 0..DH_WIDTH {
            assert_eq!(row[c], template_value(c));
        }
    }

    #[test]
    fn ranges_cover_every_dynamic_column() {
        assert_eq!(column_range(96, 66), Some(COULOMB_POS_RANGE));
        assert_eq!(column_range(96, 67), Some(COULOMB_NEG_RANGE));
        assert_eq!(column_range(96, 89), Some(MOTOR_INERTIA_RANGE));
        assert_eq!(column_range(96, 90), Some(POSITION_RANGE));
        assert_eq!(column_range(96, 95), Some(ORIENTATION_RANGE));
        assert_eq!(column_range(24, 18), Some(POSITION_RANGE));
        assert_eq!(column_range(24, 0), None);
        assert_eq!(column_range(24, 8), Some(FREE_RANGE));
    }

    #[test]
    fn dynamic_rows_need_dynamics() {
        assert!(matches!(
            encode(&puma560(), [0.0; 3], [0.0; 3], true),
            Err(DatasetError::MissingDynamics)
        ));
    }

    #[test]
    fn projection_keeps_dh_and_pose() {
        let row: Vec<f64> = (0..96).map(|i| i as f64).collect();
        let p = project_kinematic(&row).unwrap();
        assert_eq!(&p[..18], &row[..18]);
        assert_eq!(&p[18..], &row[90..]);
        assert!(project_kinematic(&[0.0; 10]).is_err());
    }
}
