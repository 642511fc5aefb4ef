use rayon::prelude::*;
use serde::Serialize;

use super::BoxFamily;
use crate::geometry::{OrientedBox, SatBox};
use crate::{Error, Mat3, Result, Vec3};

/// Relative shrink turning a half-open grid cube into a closed one.
const SHRINK: f64 = 1e-9;

/// Uniform grid of cubes of side `side` tiling `[-L, L]^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubeGrid {
    pub origin: f64,
    pub side: f64,
    pub cells: usize,
}

impl CubeGrid {
    pub fn new(half: f64, side: f64) -> Result<Self> {
        let ratio = 2.0 * half / side;
        if !(side > 0.0) || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio < 0.5 {
            return Err(Error::domain(format!("cube side {side} does not divide [-{half}, {half}]")));
        }
        Ok(CubeGrid { origin: -half, side, cells: ratio.round() as usize })
    }

    pub fn code(&self, i: [usize; 3]) -> u64 {
        let n = self.cells as u64;
        (i[0] as u64 * n + i[1] as u64) * n + i[2] as u64
    }

    pub fn index(&self, code: u64) -> [usize; 3] {
        let n = self.cells as u64;
        [(code / (n * n)) as usize, ((code / n) % n) as usize, (code % n) as usize]
    }

    /// Lower corner of cube `i`.
    pub fn lower(&self, i: [usize; 3]) -> Vec3 {
        Vec3::new(
            self.origin + i[0] as f64 * self.side,
            self.origin + i[1] as f64 * self.side,
            self.origin + i[2] as f64 * self.side,
        )
    }

    /// Cube `i` as a closed set, shrunk on its upper faces so that
    /// neighbouring cubes are disjoint.
    pub fn cube(&self, i: [usize; 3]) -> SatBox {
        let s = self.side * (1.0 - SHRINK);
        SatBox::new(self.lower(i) + Vec3::repeat(0.5 * s), [Vec3::x() * s, Vec3::y() * s, Vec3::z() * s])
    }

    /// Cube `i` mapped by the linear map `m`.
    pub fn mapped_cube(&self, i: [usize; 3], m: &Mat3) -> SatBox {
        let c = self.cube(i);
        SatBox::new(m * c.center, [m * c.edges[0], m * c.edges[1], m * c.edges[2]])
    }
}

/// The overlap predicate shared by every counting path.
#[inline]
fn meets(grid: &CubeGrid, b: &SatBox, i: [usize; 3]) -> bool {
    grid.cube(i).intersects(b)
}

fn cell_range(grid: &CubeGrid, lo: f64, hi: f64) -> (usize, usize) {
    let n = grid.cells as i64;
    let a = ((lo - grid.origin) / grid.side).floor() as i64 - 1;
    let b = ((hi - grid.origin) / grid.side).floor() as i64 + 1;
    (a.clamp(0, n - 1) as usize, b.clamp(0, n - 1) as usize)
}

/// Codes of the grid cubes meeting `b`, by column sweeps.
///
/// For a column of cubes the separating-axis constraints are linear in the
/// height index, so each column yields a candidate index range; candidates
/// are then confirmed with the same predicate as the brute-force scan.
pub fn cubes_meeting(grid: &CubeGrid, b: &SatBox) -> Vec<u64> {
    let mut out = Vec::new();
    let ext = Vec3::new(b.radius(&Vec3::x()), b.radius(&Vec3::y()), b.radius(&Vec3::z()));
    let (x0, x1) = cell_range(grid, b.center.x - ext.x, b.center.x + ext.x);
    let (y0, y1) = cell_range(grid, b.center.y - ext.y, b.center.y + ext.y);
    let (z0, z1) = cell_range(grid, b.center.z - ext.z, b.center.z + ext.z);
    let template = grid.cube([0, 0, 0]);
    let (axes, count) = template.axes_against(b);
    let limits: Vec<(Vec3, f64)> = axes[..count]
        .iter()
        .map(|a| (*a, (template.radius(a) + b.radius(a)) * (1.0 + 1e-12)))
        .collect();
    let half = template.edges[2].z * 0.5;
    let h = grid.side;
    for ix in x0..=x1 {
        for iy in y0..=y1 {
            let base = grid.lower([ix, iy, 0]) + Vec3::repeat(half);
            let (mut lo, mut hi) = (z0 as f64, z1 as f64);
            for (a, t) in &limits {
                let d0 = a.dot(&(b.center - base));
                let s = h * a.z;
                if s.abs() <= 1e-12 * (t.abs() + d0.abs()) {
                    if d0.abs() > t * (1.0 + 1e-9) {
                        lo = f64::INFINITY;
                        break;
                    }
                    continue;
                }
                // -t <= d0 - k s <= t
                let (k1, k2) = ((d0 - t) / s, (d0 + t) / s);
                lo = lo.max(k1.min(k2));
                hi = hi.min(k1.max(k2));
                if lo > hi + 2.0 {
                    break;
                }
            }
            if !(lo <= hi + 2.0) {
                continue;
            }
            let ka = ((lo.floor() as i64) - 1).max(z0 as i64) as usize;
            let kb = ((hi.ceil() as i64) + 1).min(z1 as i64);
            if kb < ka as i64 {
                continue;
            }
            for iz in ka..=kb as usize {
                if meets(grid, b, [ix, iy, iz]) {
                    out.push(grid.code([ix, iy, iz]));
                }
            }
        }
    }
    out
}

/// Codes of the grid cubes meeting `b`, by scanning every cube.
pub fn cubes_meeting_brute(grid: &CubeGrid, b: &SatBox) -> Vec<u64> {
    let n = grid.cells;
    let mut out = Vec::new();
    for ix in 0..n {
        for iy in 0..n {
            for iz in 0..n {
                if meets(grid, b, [ix, iy, iz]) {
                    out.push(grid.code([ix, iy, iz]));
                }
            }
        }
    }
    out
}

/// Per-cube incidence counts for one family; queried for any `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeCounts {
    pub grid: CubeGrid,
    /// `(cube code, number of boxes meeting it)`, sorted by code.
    pub counts: Vec<(u64, u32)>,
}

impl CubeCounts {
    fn from_codes(grid: CubeGrid, mut codes: Vec<u64>) -> Self {
        codes.par_sort_unstable();
        let mut counts: Vec<(u64, u32)> = Vec::new();
        for c in codes {
            match counts.last_mut() {
                Some((last, n)) if *last == c => *n += 1,
                _ => counts.push((c, 1)),
            }
        }
        CubeCounts { grid, counts }
    }

    /// `|Q_r|`.
    pub fn rich(&self, r: u32) -> usize {
        self.counts.iter().filter(|(_, n)| *n >= r).count()
    }

    pub fn max_count(&self) -> u32 {
        self.counts.iter().map(|(_, n)| *n).max().unwrap_or(0)
    }

    pub fn query(&self, r: u32) -> RichCubeQuery {
        let cubes = self
            .counts
            .iter()
            .filter(|(_, n)| *n >= r)
            .map(|&(code, count)| {
                let index = self.grid.index(code);
                RichCube { index, lower: self.grid.lower(index), count }
            })
            .collect();
        RichCubeQuery { side: self.grid.side, r, cubes }
    }
}

/// Counts cube incidences of `boxes` on `grid`.
pub fn cube_counts(boxes: &[OrientedBox], grid: &CubeGrid) -> CubeCounts {
    let codes: Vec<u64> = boxes.par_iter().flat_map_iter(|b| cubes_meeting(grid, &SatBox::from_box(b))).collect();
    CubeCounts::from_codes(*grid, codes)
}

/// Same counts by the all-cubes scan.
pub fn cube_counts_brute(boxes: &[OrientedBox], grid: &CubeGrid) -> CubeCounts {
    let codes: Vec<u64> = boxes.iter().flat_map(|b| cubes_meeting_brute(grid, &SatBox::from_box(b))).collect();
    CubeCounts::from_codes(*grid, codes)
}

/// All-cubes scan where every cube is first mapped by `m`.
pub fn cube_counts_mapped(boxes: &[OrientedBox], grid: &CubeGrid, m: &Mat3) -> CubeCounts {
    let n = grid.cells;
    let mut codes = Vec::new();
    for b in boxes {
        let sb = SatBox::from_box(b);
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    if grid.mapped_cube([ix, iy, iz], m).intersects(&sb) {
                        codes.push(grid.code([ix, iy, iz]));
                    }
                }
            }
        }
    }
    CubeCounts::from_codes(*grid, codes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RichCube {
    pub index: [usize; 3],
    pub lower: Vec3,
    pub count: u32,
}

/// Grid cubes meeting at least `r` boxes of a family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RichCubeQuery {
    pub side: f64,
    pub r: u32,
    pub cubes: Vec<RichCube>,
}

impl RichCubeQuery {
    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }
}

/// Grid over the family's ambient cube.
pub fn family_grid(family: &BoxFamily, side: f64) -> Result<CubeGrid> {
    CubeGrid::new(family.ambient, side)
}

pub fn count_rich_cubes(family: &BoxFamily, side: f64, r: u32) -> Result<RichCubeQuery> {
    Ok(cube_counts(&family.boxes, &family_grid(family, side)?).query(r))
}

pub fn brute_force_rich_cubes(family: &BoxFamily, side: f64, r: u32) -> Result<RichCubeQuery> {
    Ok(cube_counts_brute(&family.boxes, &family_grid(family, side)?).query(r))
}
