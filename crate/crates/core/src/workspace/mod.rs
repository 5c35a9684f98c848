//! Discretized workspaces: occupancy grids over position (or, for the
//! orientation kind, over roll-pitch-yaw bins at a fixed position), computed
//! either from the IK oracle or from a trained confidence model.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::dataset::{encode, DatasetError, KINEMATIC_WIDTH};
use crate::kinematics::{ikine_multistart, IkMask, IkOptions, KinematicsError, Manipulator, Pose, Rotation};
use crate::math::TAU;
use crate::nn::Tensor;
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkspaceError {
    #[error("workspace spec does not fit its kind: {0}")]
    SpecMismatch(&'static str),
    #[error("grids differ in bounds, resolution or kind")]
    GridMismatch,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WorkspaceKind {
    /// Positions reachable with at least one orientation.
    Reachable,
    /// Positions reachable with one fixed orientation.
    ConstantOrientation,
    /// Positions reachable with every sampled orientation in a range.
    TotalOrientation,
    /// Total-orientation over the full angle range, sampled on an `n³` grid.
    Dexterous,
    /// Orientations reachable at one fixed position; the grid spans RPY bins.
    Orientation,
}

impl WorkspaceKind {
    pub const ALL: [WorkspaceKind; 5] = [
        WorkspaceKind::Reachable,
        WorkspaceKind::ConstantOrientation,
        WorkspaceKind::TotalOrientation,
        WorkspaceKind::Dexterous,
        WorkspaceKind::Orientation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WorkspaceKind::Reachable => "reachable",
            WorkspaceKind::ConstantOrientation => "constant-orientation",
            WorkspaceKind::TotalOrientation => "total-orientation",
            WorkspaceKind::Dexterous => "dexterous",
            WorkspaceKind::Orientation => "orientation",
        }
    }
}

impl fmt::Display for WorkspaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WorkspaceKind {
    type Err = WorkspaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        WorkspaceKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or(WorkspaceError::SpecMismatch("unknown workspace kind"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceSpec {
    pub kind: WorkspaceKind,
    pub fixed_rotation: Option<Rotation>,
    pub orientation_range: Option<[(f64, f64); 3]>,
    /// Random orientations per cell (per axis for the dexterous kind).
    pub orientation_samples: usize,
    pub fixed_position: Option<[f64; 3]>,
    pub ik: IkOptions,
    pub seed: u64,
}

impl WorkspaceSpec {
    fn base(kind: WorkspaceKind) -> Self {
        WorkspaceSpec {
            kind,
            fixed_rotation: None,
            orientation_range: None,
            orientation_samples: 16,
            fixed_position: None,
            ik: IkOptions::default(),
            seed: 0,
        }
    }

    pub fn reachable() -> Self {
        Self::base(WorkspaceKind::Reachable)
    }

    pub fn constant_orientation(rotation: Rotation) -> Self {
        WorkspaceSpec {
            fixed_rotation: Some(rotation),
            ..Self::base(WorkspaceKind::ConstantOrientation)
        }
    }

    pub fn total_orientation(range: [(f64, f64); 3], samples: usize) -> Self {
        WorkspaceSpec {
            orientation_range: Some(range),
            orientation_samples: samples,
            ..Self::base(WorkspaceKind::TotalOrientation)
        }
    }

    pub fn dexterous(samples_per_axis: usize) -> Self {
        WorkspaceSpec {
            orientation_range: Some([(0.0, TAU); 3]),
            orientation_samples: samples_per_axis,
            ..Self::base(WorkspaceKind::Dexterous)
        }
    }

    pub fn orientation(position: [f64; 3]) -> Self {
        WorkspaceSpec {
            fixed_position: Some(position),
            ..Self::base(WorkspaceKind::Orientation)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), WorkspaceError> {
        use WorkspaceKind::*;
        match self.kind {
            ConstantOrientation if self.fixed_rotation.is_none() => Err(WorkspaceError::SpecMismatch(
                "constant-orientation needs a fixed rotation",
            )),
            TotalOrientation | Dexterous if self.orientation_range.is_none() => Err(WorkspaceError::SpecMismatch(
                "total-orientation needs an orientation range",
            )),
            TotalOrientation | Dexterous | Reachable if self.orientation_samples == 0 => {
                Err(WorkspaceError::SpecMismatch("orientation_samples must be positive"))
            }
            Orientation if self.fixed_position.is_none() => {
                Err(WorkspaceError::SpecMismatch("orientation kind needs a fixed position"))
            }
            _ => Ok(()),
        }
    }
}

/// Axis-aligned box split into `rx × ry × rz` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub bounds: [(f64, f64); 3],
    pub resolution: [usize; 3],
}

impl GridGeometry {
    pub fn cube(lo: f64, hi: f64, n: usize) -> Self {
        GridGeometry {
            bounds: [(lo, hi); 3],
            resolution: [n; 3],
        }
    }

    pub fn validate(&self) -> Result<(), WorkspaceError> {
        let ok = self
            .bounds
            .iter()
            .all(|&(lo, hi)| lo.is_finite() && hi.is_finite() && lo < hi);
        if !ok || self.resolution.contains(&0) {
            return Err(WorkspaceError::SpecMismatch(
                "grid needs lo < hi and positive resolution",
            ));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.iter().product()
    }

    /// `(ix, iy, iz)` of flat index `ix + rx·(iy + ry·iz)`.
    pub fn unflatten(&self, idx: usize) -> [usize; 3] {
        let [rx, ry, _] = self.resolution;
        [idx % rx, (idx / rx) % ry, idx / (rx * ry)]
    }

    pub fn flatten(&self, cell: [usize; 3]) -> usize {
        let [rx, ry, _] = self.resolution;
        cell[0] + rx * (cell[1] + ry * cell[2])
    }

    pub fn center(&self, idx: usize) -> [f64; 3] {
        let c = self.unflatten(idx);
        core::array::from_fn(|a| {
            let (lo, hi) = self.bounds[a];
            lo + (c[a] as f64 + 0.5) * (hi - lo) / self.resolution[a] as f64
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceGrid {
    pub kind: WorkspaceKind,
    pub geometry: GridGeometry,
    pub occupancy: Vec<bool>,
}

impl WorkspaceGrid {
    pub fn new(kind: WorkspaceKind, geometry: GridGeometry, occupancy: Vec<bool>) -> Result<Self, WorkspaceError> {
        geometry.validate()?;
        if occupancy.len() != geometry.cell_count() {
            return Err(WorkspaceError::ShapeMismatch(alloc::format!(
                "{} cells for resolution {:?}",
                occupancy.len(),
                geometry.resolution
            )));
        }
        Ok(WorkspaceGrid {
            kind,
            geometry,
            occupancy,
        })
    }

    pub fn occupied(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }
}

/// Candidate poses checked for one cell, and whether any (versus all) must succeed.
struct CellQuery {
    poses: Vec<(Pose, [f64; 3])>,
    any: bool,
}

fn rotation_grid(range: &[(f64, f64); 3], n: usize) -> Vec<[f64; 3]> {
    let at = |a: usize, i: usize| {
        let (lo, hi) = range[a];
        lo + (i as f64 + 0.5) * (hi - lo) / n as f64
    };
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out.push([at(0, i), at(1, j), at(2, k)]);
            }
        }
    }
    out
}

fn cell_query(spec: &WorkspaceSpec, geom: &GridGeometry, idx: usize) -> CellQuery {
    use WorkspaceKind::*;
    let center = geom.center(idx);
    let pose_at = |p: [f64; 3], rpy: [f64; 3]| (Pose::new(Rotation::from_rpy(rpy[0], rpy[1], rpy[2]), p), rpy);
    match spec.kind {
        Reachable => {
            let mut rng = substream(spec.seed, 1, idx as u64);
            let poses = (0..spec.orientation_samples)
                .map(|_| {
                    let rpy: [f64; 3] = core::array::from_fn(|_| rng.random_range(0.0..TAU));
                    pose_at(center, rpy)
                })
                .collect();
            CellQuery { poses, any: true }
        }
        ConstantOrientation => {
            let r = spec.fixed_rotation.expect("validated");
            CellQuery {
                poses: alloc::vec![(Pose::new(r, center), r.to_rpy())],
                any: true,
            }
        }
        TotalOrientation => {
            let range = spec.orientation_range.expect("validated");
            let mut rng = substream(spec.seed, 1, idx as u64);
            let poses = (0..spec.orientation_samples)
                .map(|_| {
                    let rpy: [f64; 3] = core::array::from_fn(|a| rng.random_range(range[a].0..range[a].1));
                    pose_at(center, rpy)
                })
                .collect();
            CellQuery { poses, any: false }
        }
        Dexterous => {
            let range = spec.orientation_range.expect("validated");
            let poses = rotation_grid(&range, spec.orientation_samples)
                .into_iter()
                .map(|rpy| pose_at(center, rpy))
                .collect();
            CellQuery { poses, any: false }
        }
        Orientation => {
            let p = spec.fixed_position.expect("validated");
            CellQuery {
                poses: alloc::vec![pose_at(p, center)],
                any: true,
            }
        }
    }
}

fn check_pairing(spec: &WorkspaceSpec, geom: &GridGeometry) -> Result<(), WorkspaceError> {
    spec.validate()?;
    geom.validate()
}

/// IK-oracle occupancy of cell `idx`. Depends only on `(spec.seed, idx)`,
/// so cells may be evaluated in any order or in parallel.
///
/// The reachable kind solves for position only: a converged solution is a
/// witness orientation, which is exactly the "at least one orientation"
/// definition. Other kinds solve the full pose for every candidate.
pub fn cell_occupied_ik(
    m: &Manipulator,
    spec: &WorkspaceSpec,
    geom: &GridGeometry,
    idx: usize,
) -> Result<bool, WorkspaceError> {
    let q = cell_query(spec, geom, idx);
    let mut ik = spec.ik;
    let poses: &[(Pose, [f64; 3])] = if spec.kind == WorkspaceKind::Reachable {
        ik.mask = IkMask::PositionOnly;
        &q.poses[..1]
    } else {
        &q.poses
    };
    let mut rng = substream(spec.seed, 2, idx as u64);
    for (pose, _) in poses {
        let hit = ikine_multistart(m, pose, &ik, &mut rng)?.converged;
        if hit == q.any {
            return Ok(hit);
        }
    }
    Ok(!q.any)
}

/// Ground-truth workspace from multi-start numerical IK at every cell center.
pub fn gen_workspace_ik(
    m: &Manipulator,
    spec: &WorkspaceSpec,
    geom: &GridGeometry,
) -> Result<WorkspaceGrid, WorkspaceError> {
    check_pairing(spec, geom)?;
    let occupancy = (0..geom.cell_count())
        .map(|i| cell_occupied_ik(m, spec, geom, i))
        .collect::<Result<Vec<_>, _>>()?;
    WorkspaceGrid::new(spec.kind, *geom, occupancy)
}

/// Anything that maps feature rows to reachability confidences in `[0, 1]`.
pub trait ConfidenceModel {
    /// Feature width the model consumes (24 or 96).
    fn input_width(&self) -> usize;
    fn confidence(&self, features: &Tensor) -> Result<Vec<f64>, WorkspaceError>;
}

/// Rows evaluated per model call.
const NN_BATCH: usize = 4096;

/// Feature rows for every candidate pose of every cell, with cell ownership.
pub fn workspace_features(
    width: usize,
    m: &Manipulator,
    spec: &WorkspaceSpec,
    geom: &GridGeometry,
) -> Result<(Tensor, Vec<usize>), WorkspaceError> {
    check_pairing(spec, geom)?;
    let dynamic = width != KINEMATIC_WIDTH;
    let mut data = Vec::new();
    let mut owner = Vec::new();
    for idx in 0..geom.cell_count() {
        for (pose, rpy) in cell_query(spec, geom, idx).poses {
            data.extend(encode(m, pose.translation, rpy, dynamic)?);
            owner.push(idx);
        }
    }
    let rows = owner.len();
    let t = Tensor::matrix(rows, width, data).map_err(|e| WorkspaceError::ShapeMismatch(alloc::format!("{e}")))?;
    Ok((t, owner))
}

/// Workspace predicted by a confidence model: a candidate pose counts when
/// its confidence is at least `threshold`.
pub fn gen_workspace_nn(
    model: &dyn ConfidenceModel,
    m: &Manipulator,
    spec: &WorkspaceSpec,
    geom: &GridGeometry,
    threshold: f64,
) -> Result<WorkspaceGrid, WorkspaceError> {
    let width = model.input_width();
    let (features, owner) = workspace_features(width, m, spec, geom)?;
    let mut conf = Vec::with_capacity(owner.len());
    let mut start = 0;
    while start < owner.len() {
        let end = (start + NN_BATCH).min(owner.len());
        let out = model.confidence(&features.slice_rows(start..end))?;
        if out.len() != end - start {
            return Err(WorkspaceError::ShapeMismatch(alloc::format!(
                "model returned {} confidences for {} rows",
                out.len(),
                end - start
            )));
        }
        conf.extend(out);
        start = end;
    }
    let any = matches!(
        spec.kind,
        WorkspaceKind::Reachable | WorkspaceKind::ConstantOrientation | WorkspaceKind::Orientation
    );
    let mut occupancy = alloc::vec![!any; geom.cell_count()];
    for (&cell, &c) in owner.iter().zip(&conf) {
        let hit = c >= threshold;
        if any {
            occupancy[cell] |= hit;
        } else {
            occupancy[cell] &= hit;
        }
    }
    WorkspaceGrid::new(spec.kind, *geom, occupancy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridComparison {
    /// `TP / (TP + FP + FN)`; 1 when both grids are empty.
    pub iou: f64,
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
}

/// Cellwise agreement of `predicted` against `truth`.
pub fn compare_workspaces(truth: &WorkspaceGrid, predicted: &WorkspaceGrid) -> Result<GridComparison, WorkspaceError> {
    if truth.geometry != predicted.geometry || truth.occupancy.len() != predicted.occupancy.len() {
        return Err(WorkspaceError::GridMismatch);
    }
    let (mut tp, mut fp, mut fneg, mut tn) = (0, 0, 0, 0);
    for (&t, &p) in truth.occupancy.iter().zip(&predicted.occupancy) {
        match (t, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fneg += 1,
            (false, false) => tn += 1,
        }
    }
    let union = tp + fp + fneg;
    Ok(GridComparison {
        iou: if union == 0 { 1.0 } else { tp as f64 / union as f64 },
        true_pos: tp,
        false_pos: fp,
        false_neg: fneg,
        true_neg: tn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::planar;

    struct Constant(f64);

    impl ConfidenceModel for Constant {
        fn input_width(&self) -> usize {
            24
        }
        fn confidence(&self, f: &Tensor) -> Result<Vec<f64>, WorkspaceError> {
            Ok(alloc::vec![self.0; f.rows()])
        }
    }

    fn grid(occ: &[bool]) -> WorkspaceGrid {
        let g = GridGeometry {
            bounds: [(0.0, 1.0); 3],
            resolution: [occ.len(), 1, 1],
        };
        WorkspaceGrid::new(WorkspaceKind::Reachable, g, occ.to_vec()).unwrap()
    }

    #[test]
    fn flat_index_layout() {
        let g = GridGeometry {
            bounds: [(0.0, 1.0); 3],
            resolution: [3, 4, 5],
        };
        for i in 0..g.cell_count() {
            assert_eq!(g.flatten(g.unflatten(i)), i);
        }
        assert_eq!(g.unflatten(1 + 3 * (2 + 4 * 3)), [1, 2, 3]);
        assert_eq!(g.center(0), [1.0 / 6.0, 0.125, 0.1]);
    }

    #[test]
    fn iou_examples() {
        let a = grid(&[true, true, false]);
        assert_eq!(compare_workspaces(&a, &a).unwrap().iou, 1.0);
        let b = grid(&[false, false, true]);
        assert_eq!(compare_workspaces(&a, &b).unwrap().iou, 0.0);
        let c = grid(&[true, false, true, false]);
        let d = grid(&[true, true, false, false]);
        let r = compare_workspaces(&c, &d).unwrap();
        assert_eq!((r.true_pos, r.false_pos, r.false_neg, r.true_neg), (1, 1, 1, 1));
        assert!((r.iou - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(compare_workspaces(&a, &c), Err(WorkspaceError::GridMismatch));
    }

    #[test]
    fn spec_pairing_is_checked() {
        let mut s = WorkspaceSpec::reachable();
        s.kind = WorkspaceKind::ConstantOrientation;
        assert!(s.validate().is_err());
        let mut o = WorkspaceSpec::reachable();
        o.kind = WorkspaceKind::Orientation;
        assert!(o.validate().is_err());
        let g = GridGeometry::cube(1.0, 1.0, 2);
        assert!(g.validate().is_err());
    }

    #[test]
    fn stub_models_fill_or_empty_the_grid() {
        let m = crate::kinematics::puma560();
        let g = GridGeometry::cube(-0.4, 0.4, 3);
        let spec = WorkspaceSpec::constant_orientation(Rotation::IDENTITY);
        let full = gen_workspace_nn(&Constant(1.0), &m, &spec, &g, 0.5).unwrap();
        assert_eq!(full.occupied(), 27);
        let empty = gen_workspace_nn(&Constant(0.0), &m, &spec, &g, 0.5).unwrap();
        assert_eq!(empty.occupied(), 0);
    }

    #[test]
    fn two_link_reachable_is_an_annulus_in_the_plane() {
        let m = planar(&[1.0, 1.0]).unwrap();
        let g = GridGeometry {
            bounds: [(-2.5, 2.5), (-2.5, 2.5), (-0.5, 0.5)],
            resolution: [11, 11, 1],
        };
        let ws = gen_workspace_ik(&m, &WorkspaceSpec::reachable(), &g).unwrap();
        for i in 0..g.cell_count() {
            let c = g.center(i);
            let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
            if r < 1.9 {
                assert!(ws.occupancy[i], "cell at r={r} should be reachable");
            }
            if r > 2.03 {
                assert!(!ws.occupancy[i], "cell at r={r} should be empty");
            }
        }
    }
}
