use alloc::vec::Vec;

use rand::Rng;

use super::layout::{
    encode, COM_RANGE, COULOMB_NEG_RANGE, COULOMB_POS_RANGE, DOF, FREE_COLUMNS, FREE_RANGE, GEAR_RANGE, INERTIA_RANGE,
    MASS_RANGE, MOTOR_INERTIA_RANGE, ORIENTATION_RANGE, VISCOUS_RANGE,
};
use super::{DatasetError, DatasetFile, Frame, SampleOptions, Variant};
use crate::kinematics::{
    ikine_multistart, jacob0, jacobe, DhLink, DynamicsParams, IkSolution, JacobianMatrix, Manipulator, Pose, Rotation,
    PUMA560_A, PUMA560_ALPHA, PUMA560_D,
};
use crate::linalg::norm;
use crate::math::round;
use crate::nn::Tensor;
use crate::rng::stream;

fn uniform<R: Rng + ?Sized>(rng: &mut R, range: (f64, f64)) -> f64 {
    rng.random_range(range.0..range.1)
}

/// PUMA 560 template with `d₃, d₄, a₂, a₃` drawn from `U(0, 0.5)`.
pub fn rand_kine<R: Rng + ?Sized>(rng: &mut R) -> Manipulator {
    rand_kine_in(rng, FREE_RANGE)
}

pub fn rand_kine_in<R: Rng + ?Sized>(rng: &mut R, range: (f64, f64)) -> Manipulator {
    Manipulator::from_links(template_links(rng, range)).expect("sampled chain is finite")
}

fn template_links<R: Rng + ?Sized>(rng: &mut R, range: (f64, f64)) -> Vec<DhLink> {
    let mut d = PUMA560_D;
    let mut a = PUMA560_A;
    for col in FREE_COLUMNS {
        let v = uniform(rng, range);
        if col < 6 {
            d[col] = v;
        } else {
            a[col - 6] = v;
        }
    }
    (0..DOF).map(|i| DhLink::new(d[i], a[i], PUMA560_ALPHA[i])).collect()
}

/// [`rand_kine`] plus per-link dynamics drawn uniformly from the layout ranges.
pub fn rand_dyna<R: Rng + ?Sized>(rng: &mut R) -> Manipulator {
    rand_dyna_in(rng, FREE_RANGE)
}

fn rand_dyna_in<R: Rng + ?Sized>(rng: &mut R, range: (f64, f64)) -> Manipulator {
    let links = template_links(rng, range);
    let dynamics = (0..DOF)
        .map(|_| DynamicsParams {
            m: uniform(rng, MASS_RANGE),
            r: [
                uniform(rng, COM_RANGE),
                uniform(rng, COM_RANGE),
                uniform(rng, COM_RANGE),
            ],
            i_diag: [
                uniform(rng, INERTIA_RANGE),
                uniform(rng, INERTIA_RANGE),
                uniform(rng, INERTIA_RANGE),
            ],
            b: uniform(rng, VISCOUS_RANGE),
            tc: [uniform(rng, COULOMB_POS_RANGE), uniform(rng, COULOMB_NEG_RANGE)],
            g: uniform(rng, GEAR_RANGE),
            jm: uniform(rng, MOTOR_INERTIA_RANGE),
        })
        .collect();
    Manipulator::new(links, Some(dynamics)).expect("sampled dynamics are in range")
}

/// Uniform position in the cube `opts.pose_position_range³` and roll-pitch-yaw
/// angles in `[0, 2π)³`. Returns the pose with its sampled angles.
pub fn rand_pose<R: Rng + ?Sized>(rng: &mut R, opts: &SampleOptions) -> (Pose, [f64; 3]) {
    let r = opts.pose_position_range;
    let position = [uniform(rng, r), uniform(rng, r), uniform(rng, r)];
    let rpy = [
        uniform(rng, ORIENTATION_RANGE),
        uniform(rng, ORIENTATION_RANGE),
        uniform(rng, ORIENTATION_RANGE),
    ];
    (Pose::new(Rotation::from_rpy(rpy[0], rpy[1], rpy[2]), position), rpy)
}

/// Multi-start IK for `target`; `None` when no start converges. Targets
/// farther from the base than the chain's total length are rejected
/// without iterating.
pub fn solve_target<R: Rng + ?Sized>(
    m: &Manipulator,
    target: &Pose,
    opts: &SampleOptions,
    rng: &mut R,
) -> Result<Option<IkSolution>, DatasetError> {
    if norm(target.translation) > m.reach_bound() + opts.cutoff {
        return Ok(None);
    }
    let sol = ikine_multistart(m, target, &opts.ik_options(), rng)?;
    Ok(sol.converged.then_some(sol))
}

/// 1 when the multi-start IK converges for `target`.
pub fn label_confidence<R: Rng + ?Sized>(
    m: &Manipulator,
    target: &Pose,
    opts: &SampleOptions,
    rng: &mut R,
) -> Result<bool, DatasetError> {
    Ok(solve_target(m, target, opts, rng)?.is_some())
}

/// Jacobian at the IK solution for `target`, or the all-infinite sentinel.
pub fn label_jacobian<R: Rng + ?Sized>(
    m: &Manipulator,
    target: &Pose,
    frame: Frame,
    opts: &SampleOptions,
    rng: &mut R,
) -> Result<JacobianMatrix, DatasetError> {
    Ok(match solve_target(m, target, opts, rng)? {
        Some(sol) => match frame {
            Frame::World => jacob0(m, &sol.q)?,
            Frame::EndEffector => jacobe(m, &sol.q)?,
        },
        None => JacobianMatrix::sentinel(m.dof()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRow {
    pub features: Vec<f64>,
    pub labels: Vec<f64>,
}

/// Sample `index` of a run: depends only on `(opts.seed, index)`.
pub fn sample_row(index: u64, opts: &SampleOptions) -> Result<LabeledRow, DatasetError> {
    let mut rng = stream(opts.seed, index);
    let variant = opts.variant;
    let m = if variant.is_dynamic() {
        rand_dyna_in(&mut rng, opts.dh_free_range)
    } else {
        rand_kine_in(&mut rng, opts.dh_free_range)
    };
    let (pose, rpy) = rand_pose(&mut rng, opts);
    let features = encode(&m, pose.translation, rpy, variant.is_dynamic())?;
    let labels = match variant.frame() {
        None => {
            let hit = label_confidence(&m, &pose, opts, &mut rng)?;
            alloc::vec![if hit { 1.0 } else { 0.0 }]
        }
        Some(frame) => label_jacobian(&m, &pose, frame, opts, &mut rng)?
            .as_row_major()
            .to_vec(),
    };
    Ok(LabeledRow { features, labels })
}

/// Rows reserved for the test split: `round(num · ratio)`.
pub fn test_count(num: usize, ratio: f64) -> usize {
    (round(num as f64 * ratio) as usize).min(num)
}

/// Splits rows in index order; the last [`test_count`] rows form the test file.
pub fn split_rows(
    rows: Vec<LabeledRow>,
    variant: Variant,
    test_ratio: f64,
) -> Result<(DatasetFile, DatasetFile), DatasetError> {
    let n_test = test_count(rows.len(), test_ratio);
    let n_train = rows.len() - n_test;
    let fw = variant.feature_width();
    let tw = variant.target_width();
    let build = |part: &[LabeledRow]| -> Result<DatasetFile, DatasetError> {
        let mut f = Vec::with_capacity(part.len() * fw);
        let mut l = Vec::with_capacity(part.len() * tw);
        for r in part {
            f.extend_from_slice(&r.features);
            l.extend_from_slice(&r.labels);
        }
        DatasetFile::new(
            variant,
            Tensor::matrix(part.len(), fw, f)?,
            Tensor::matrix(part.len(), tw, l)?,
        )
    };
    Ok((build(&rows[..n_train])?, build(&rows[n_train..])?))
}

/// Draws and labels `num` samples serially and returns the (train, test) split.
pub fn nnsample(num: usize, opts: &SampleOptions) -> Result<(DatasetFile, DatasetFile), DatasetError> {
    if num < 1 {
        return Err(DatasetError::InvalidOptions("num must be at least 1"));
    }
    opts.validate()?;
    let rows = (0..num as u64)
        .map(|i| sample_row(i, opts))
        .collect::<Result<Vec<_>, _>>()?;
    split_rows(rows, opts.variant, opts.test_ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{decode, CONSTANT_COLUMNS};

    #[test]
    fn equal_seeds_give_equal_manipulators() {
        assert_eq!(rand_kine(&mut stream(5, 1)), rand_kine(&mut stream(5, 1)));
        assert_eq!(rand_dyna(&mut stream(5, 1)), rand_dyna(&mut stream(5, 1)));
        assert_ne!(rand_kine(&mut stream(5, 1)), rand_kine(&mut stream(5, 2)));
    }

    #[test]
    fn encoded_rows_decode_to_the_same_manipulator() {
        let mut rng = stream(9, 0);
        let m = rand_dyna(&mut rng);
        let opts = SampleOptions::default();
        let (pose, rpy) = rand_pose(&mut rng, &opts);
        let row = encode(&m, pose.translation, rpy, true).unwrap();
        let (m2, p2) = decode(&row).unwrap();
        assert_eq!(m, m2);
        assert_eq!(pose, p2);
    }

    #[test]
    fn zero_angles_give_identity() {
        assert_eq!(Rotation::from_rpy(0.0, 0.0, 0.0), Rotation::IDENTITY);
    }

    #[test]
    fn far_pose_is_unreachable() {
        let m = rand_kine(&mut stream(1, 1));
        let far = Pose::from_translation([m.reach_bound() + 1.0, 0.0, 0.0]);
        let opts = SampleOptions::default();
        assert!(!label_confidence(&m, &far, &opts, &mut stream(0, 0)).unwrap());
        let j = label_jacobian(&m, &far, Frame::World, &opts, &mut stream(0, 0)).unwrap();
        assert!(j.is_sentinel());
    }

    #[test]
    fn fkine_target_is_reachable() {
        let m = rand_kine(&mut stream(2, 2));
        let target = m.fkine(&[0.3, -0.5, 0.9, 0.2, 0.7, -1.1]).unwrap();
        let opts = SampleOptions::default();
        assert!(label_confidence(&m, &target, &opts, &mut stream(0, 0)).unwrap());
    }

    #[test]
    fn split_counts_follow_ratio() {
        assert_eq!(test_count(300_000, 0.01), 3000);
        assert_eq!(test_count(200_000, 0.01), 2000);
        let opts = SampleOptions {
            test_ratio: 0.25,
            ..Default::default()
        };
        let (train, test) = nnsample(8, &opts).unwrap();
        assert_eq!((train.len(), test.len()), (6, 2));
        assert_eq!(train.features.cols(), 24);
        let row0 = sample_row(6, &opts).unwrap();
        assert_eq!(test.features.row(0), &row0.features[..]);
        for r in train.features.iter_rows() {
            for c in CONSTANT_COLUMNS {
                assert_eq!(r[c], crate::dataset::template_value(c));
            }
        }
    }
}
