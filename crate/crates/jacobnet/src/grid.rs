//! Workspace grid files: a point-list CSV for plotting and a run-length
//! encoded text form (see `docs/formats.md`).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use jacobnet_core::kinematics::Manipulator;
use jacobnet_core::workspace::{cell_occupied_ik, GridGeometry, WorkspaceGrid, WorkspaceKind, WorkspaceSpec};
use rayon::prelude::*;

use crate::error::{Error, Result};

const RLE_MAGIC: &str = "jacobnet-grid 1";

/// [`jacobnet_core::workspace::gen_workspace_ik`] with cells spread over a
/// rayon pool; the grid is identical for any thread count.
pub fn gen_workspace_ik_par(
    m: &Manipulator,
    spec: &WorkspaceSpec,
    geom: &GridGeometry,
    threads: Option<usize>,
) -> Result<WorkspaceGrid> {
    spec.validate()?;
    geom.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    let occupancy = pool.install(|| {
        (0..geom.cell_count())
            .into_par_iter()
            .map(|i| cell_occupied_ik(m, spec, geom, i))
            .collect::<std::result::Result<Vec<_>, _>>()
    })?;
    Ok(WorkspaceGrid::new(spec.kind, *geom, occupancy)?)
}

/// One line per cell: the cell center and 0/1 occupancy, with a header.
pub fn points_csv(grid: &WorkspaceGrid) -> String {
    let mut s = String::new();
    s.push_str(if grid.kind == WorkspaceKind::Orientation {
        "roll,pitch,yaw,occupied\n"
    } else {
        "x,y,z,occupied\n"
    });
    for (i, &occ) in grid.occupancy.iter().enumerate() {
        let c = grid.geometry.center(i);
        let _ = writeln!(s, "{},{},{},{}", c[0], c[1], c[2], occ as u8);
    }
    s
}

/// Run lengths alternate empty, occupied, empty, ... starting with empty
/// (the first run may be 0), in flat cell order.
pub fn encode_rle(grid: &WorkspaceGrid) -> String {
    let g = &grid.geometry;
    let mut s = String::new();
    let _ = writeln!(s, "{RLE_MAGIC}");
    let _ = writeln!(s, "kind {}", grid.kind);
    let b = g.bounds;
    let _ = writeln!(
        s,
        "bounds {} {} {} {} {} {}",
        b[0].0, b[0].1, b[1].0, b[1].1, b[2].0, b[2].1
    );
    let r = g.resolution;
    let _ = writeln!(s, "resolution {} {} {}", r[0], r[1], r[2]);
    s.push_str("runs");
    let mut current = false;
    let mut run = 0usize;
    for &occ in &grid.occupancy {
        if occ != current {
            let _ = write!(s, " {run}");
            current = occ;
            run = 0;
        }
        run += 1;
    }
    let _ = writeln!(s, " {run}");
    s
}

pub fn decode_rle(text: &str, path: &Path) -> Result<WorkspaceGrid> {
    let bad = |row: usize, reason: &str| Error::MalformedRow {
        path: path.to_path_buf(),
        row,
        reason: reason.to_string(),
    };
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < 5 || lines[0].trim() != RLE_MAGIC {
        return Err(bad(0, "not a jacobnet grid file"));
    }
    let field = |i: usize, key: &str| -> Result<Vec<&str>> {
        let mut parts = lines[i].split_whitespace();
        if parts.next() != Some(key) {
            return Err(bad(i, &format!("expected `{key}`")));
        }
        Ok(parts.collect())
    };
    let kind: WorkspaceKind = field(1, "kind")?
        .first()
        .ok_or_else(|| bad(1, "missing kind"))?
        .parse()
        .map_err(|_| bad(1, "unknown kind"))?;
    let nums = |i: usize, key: &str, n: usize| -> Result<Vec<f64>> {
        let v: Vec<f64> = field(i, key)?
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(i, "not a number"))?;
        if v.len() != n {
            return Err(bad(i, &format!("expected {n} values")));
        }
        Ok(v)
    };
    let b = nums(2, "bounds", 6)?;
    let r = nums(3, "resolution", 3)?;
    let geometry = GridGeometry {
        bounds: [(b[0], b[1]), (b[2], b[3]), (b[4], b[5])],
        resolution: [r[0] as usize, r[1] as usize, r[2] as usize],
    };
    let mut occupancy = Vec::with_capacity(geometry.cell_count());
    let mut value = false;
    for t in field(4, "runs")? {
        let n: usize = t.parse().map_err(|_| bad(4, "bad run length"))?;
        occupancy.extend(std::iter::repeat(value).take(n));
        value = !value;
    }
    WorkspaceGrid::new(kind, geometry, occupancy).map_err(|_| bad(4, "run lengths do not cover the grid"))
}

pub fn write_grid_files(dir: &Path, stem: &str, grid: &WorkspaceGrid) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join(format!("{stem}.csv"));
    fs::write(&csv, points_csv(grid)).map_err(|e| Error::io(&csv, e))?;
    let rle = dir.join(format!("{stem}.rle"));
    fs::write(&rle, encode_rle(grid)).map_err(|e| Error::io(&rle, e))
}

pub fn read_rle_file(path: &Path) -> Result<WorkspaceGrid> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_rle(&text, path)
}
