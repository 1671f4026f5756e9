//! Level-set extraction: grid evaluation, marching squares, marching cubes.

mod cubes;
mod squares;
mod tables;

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{cross, norm3, sub, Point};
use crate::net::{ImplicitNet, NetError, Workspace};

pub use cubes::marching_cubes;
pub use squares::{marching_squares, marching_squares_with_sampler};

/// Scalar field sampled on a regular node grid.
///
/// `res` counts nodes per axis (at least 2 per used axis); 2D grids have
/// `res[2] == 1` and live in the `z = 0` plane. Values are stored with
/// `x` fastest, then `y`, then `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    pub dim: usize,
    pub min: Point,
    pub max: Point,
    pub res: [usize; 3],
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(dim: usize, min: Point, max: Point, res: [usize; 3]) -> Self {
        assert!(dim == 2 || dim == 3);
        let res = if dim == 2 { [res[0], res[1], 1] } else { res };
        for a in 0..dim {
            assert!(res[a] >= 2, "need at least 2 nodes per axis");
            assert!(max[a] > min[a]);
        }
        let count = res[0] * res[1] * res[2];
        Self {
            dim,
            min,
            max,
            res,
            values: vec![0.0; count],
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.res[1] + j) * self.res[0] + i
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    /// Node spacing along `axis`.
    pub fn spacing(&self, axis: usize) -> f64 {
        if self.res[axis] < 2 {
            0.0
        } else {
            (self.max[axis] - self.min[axis]) / (self.res[axis] - 1) as f64
        }
    }

    pub fn node_pos(&self, i: usize, j: usize, k: usize) -> Point {
        [
            self.min[0] + self.spacing(0) * i as f64,
            self.min[1] + self.spacing(1) * j as f64,
            if self.dim == 2 {
                self.min[2]
            } else {
                self.min[2] + self.spacing(2) * k as f64
            },
        ]
    }

    /// Multilinear interpolation of the stored values at `p` (clamped to
    /// the grid). Bilinear for 2D grids.
    pub fn interpolate(&self, p: Point) -> f64 {
        let mut cell = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..self.dim {
            let sp = self.spacing(a);
            let t = ((p[a] - self.min[a]) / sp).clamp(0.0, (self.res[a] - 1) as f64);
            let c = (t.floor() as usize).min(self.res[a] - 2);
            cell[a] = c;
            frac[a] = t - c as f64;
        }
        if self.dim == 2 {
            let (i, j) = (cell[0], cell[1]);
            let (fx, fy) = (frac[0], frac[1]);
            let v00 = self.value(i, j, 0);
            let v10 = self.value(i + 1, j, 0);
            let v01 = self.value(i, j + 1, 0);
            let v11 = self.value(i + 1, j + 1, 0);
            (v00 * (1.0 - fx) + v10 * fx) * (1.0 - fy) + (v01 * (1.0 - fx) + v11 * fx) * fy
        } else {
            let (i, j, k) = (cell[0], cell[1], cell[2]);
            let (fx, fy, fz) = (frac[0], frac[1], frac[2]);
            let mut acc = 0.0;
            for dz in 0..2 {
                let wz = if dz == 0 { 1.0 - fz } else { fz };
                for dy in 0..2 {
                    let wy = if dy == 0 { 1.0 - fy } else { fy };
                    for dx in 0..2 {
                        let wx = if dx == 0 { 1.0 - fx } else { fx };
                        acc += wx * wy * wz * self.value(i + dx, j + dy, k + dz);
                    }
                }
            }
            acc
        }
    }
}

/// Fills a grid from an arbitrary field. Rows are processed in fixed
/// chunks, so the result does not depend on thread count.
pub fn grid_from_fn<F>(dim: usize, min: Point, max: Point, res: [usize; 3], field: F) -> ScalarGrid
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut grid = ScalarGrid::new(dim, min, max, res);
    let geometry = GridGeometry::of(&grid);
    let rows: Vec<(usize, &mut [f64])> = grid
        .values
        .chunks_mut(geometry.res[0])
        .enumerate()
        .collect();
    let fill_row = |row: usize, out: &mut [f64]| {
        let j = row % geometry.res[1];
        let k = row / geometry.res[1];
        for (i, v) in out.iter_mut().enumerate() {
            let p = geometry.node_pos(i, j, k);
            *v = field(&p[..dim]);
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        rows.into_par_iter().for_each(|(row, out)| fill_row(row, out));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (row, out) in rows {
            fill_row(row, out);
        }
    }
    grid
}

/// Plain-data copy of grid geometry so closures can stay `Sync`.
#[derive(Clone, Copy)]
struct GridGeometry {
    dim: usize,
    min: Point,
    spacing: [f64; 3],
    res: [usize; 3],
}

impl GridGeometry {
    fn of(grid: &ScalarGrid) -> Self {
        Self {
            dim: grid.dim,
            min: grid.min,
            spacing: [grid.spacing(0), grid.spacing(1), grid.spacing(2)],
            res: grid.res,
        }
    }

    fn node_pos(&self, i: usize, j: usize, k: usize) -> Point {
        [
            self.min[0] + self.spacing[0] * i as f64,
            self.min[1] + self.spacing[1] * j as f64,
            if self.dim == 2 {
                self.min[2]
            } else {
                self.min[2] + self.spacing[2] * k as f64
            },
        ]
    }
}

/// Evaluates `f(x; theta)` at every grid node.
pub fn grid_eval(
    net: &ImplicitNet,
    z: Option<&[f64]>,
    min: Point,
    max: Point,
    res: [usize; 3],
) -> Result<ScalarGrid, NetError> {
    let dim = net.spatial_dim();
    // Validate dimensions once; per-node evaluation then skips checks.
    crate::net::forward(net, &min[..dim], z)?;
    let mut grid = ScalarGrid::new(dim, min, max, res);
    let geometry = GridGeometry::of(&grid);
    let rows: Vec<(usize, &mut [f64])> = grid
        .values
        .chunks_mut(geometry.res[0])
        .enumerate()
        .collect();
    let fill_row = |row: usize, out: &mut [f64]| {
        let mut ws = Workspace::for_net(net);
        let j = row % geometry.res[1];
        let k = row / geometry.res[1];
        for (i, v) in out.iter_mut().enumerate() {
            let p = geometry.node_pos(i, j, k);
            *v = ws.eval(net, &p[..dim], z);
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        rows.into_par_iter().for_each(|(row, out)| fill_row(row, out));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (row, out) in rows {
            fill_row(row, out);
        }
    }
    Ok(grid)
}

/// Triangle mesh produced by marching cubes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[u32; 3]>,
}

impl SurfaceMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn face_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (a, b, c) = (
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        );
        0.5 * norm3(cross(sub(b, a), sub(c, a)))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.face_area(t)).sum()
    }

    /// Unit face normal, `None` for degenerate faces.
    pub fn face_normal(&self, t: usize) -> Option<Point> {
        let [a, b, c] = self.triangles[t];
        let (a, b, c) = (
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        );
        crate::linalg::normalize(cross(sub(b, a), sub(c, a)))
    }

    /// True when every edge is shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        use alloc::collections::BTreeMap;
        if self.triangles.is_empty() {
            return false;
        }
        let mut edges: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let a = t[e];
                let b = t[(e + 1) % 3];
                let key = (a.min(b), a.max(b));
                *edges.entry(key).or_insert(0) += 1;
            }
        }
        edges.values().all(|&c| c == 2)
    }
}

/// One connected polyline chain in the plane.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Chain {
    pub points: Vec<Point>,
    pub closed: bool,
}

impl Chain {
    pub fn length(&self) -> f64 {
        let mut l = 0.0;
        for w in self.points.windows(2) {
            l += crate::linalg::dist(w[0], w[1]);
        }
        if self.closed && self.points.len() > 1 {
            l += crate::linalg::dist(*self.points.last().unwrap(), self.points[0]);
        }
        l
    }
}

/// Extracted 2D level curves.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polyline {
    pub chains: Vec<Chain>,
}

impl Polyline {
    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.chains.iter().map(Chain::length).sum()
    }

    pub fn num_points(&self) -> usize {
        self.chains.iter().map(|c| c.points.len()).sum()
    }
}
