//! Marching cubes over a 3D scalar grid.
//!
//! Crossing vertices are keyed by their grid edge, so shared cell faces
//! reuse identical vertices and the mesh comes out watertight wherever
//! the field is well resolved. Interpolation runs from the lower grid
//! node to the upper one along each edge, independent of which cell asks
//! first.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::tables::{EDGE_CORNERS, TRI_TABLE};
use super::{ScalarGrid, SurfaceMesh};
use crate::linalg::Point;

/// Canonical crossing vertex per grid edge, keyed by `(axis, i, j, k)`.
struct VertexPool<'g> {
    grid: &'g ScalarGrid,
    iso: f64,
    vertices: Vec<Point>,
    by_edge: BTreeMap<(u8, u32, u32, u32), u32>,
}

impl VertexPool<'_> {
    fn vertex_on(&mut self, axis: u8, i: usize, j: usize, k: usize) -> u32 {
        let grid = self.grid;
        let iso = self.iso;
        let vertices = &mut self.vertices;
        *self
            .by_edge
            .entry((axis, i as u32, j as u32, k as u32))
            .or_insert_with(|| {
                let (i1, j1, k1) = match axis {
                    0 => (i + 1, j, k),
                    1 => (i, j + 1, k),
                    _ => (i, j, k + 1),
                };
                let v0 = grid.value(i, j, k);
                let v1 = grid.value(i1, j1, k1);
                let p0 = grid.node_pos(i, j, k);
                let p1 = grid.node_pos(i1, j1, k1);
                let t = (iso - v0) / (v1 - v0);
                let id = vertices.len() as u32;
                vertices.push([
                    p0[0] + t * (p1[0] - p0[0]),
                    p0[1] + t * (p1[1] - p0[1]),
                    p0[2] + t * (p1[2] - p0[2]),
                ]);
                id
            })
    }
}

/// Extracts the iso-surface as a triangle mesh.
pub fn marching_cubes(grid: &ScalarGrid, iso: f64) -> SurfaceMesh {
    assert_eq!(grid.dim, 3, "marching cubes needs a 3D grid");
    let (nx, ny, nz) = (grid.res[0], grid.res[1], grid.res[2]);

    let mut pool = VertexPool {
        grid,
        iso,
        vertices: Vec::new(),
        by_edge: BTreeMap::new(),
    };
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    // Cell-local edge -> (axis, base node) in grid coordinates.
    #[inline]
    fn edge_key(e: usize, i: usize, j: usize, k: usize) -> (u8, usize, usize, usize) {
        match e {
            0 => (0, i, j, k),
            1 => (1, i + 1, j, k),
            2 => (0, i, j + 1, k),
            3 => (1, i, j, k),
            4 => (0, i, j, k + 1),
            5 => (1, i + 1, j, k + 1),
            6 => (0, i, j + 1, k + 1),
            7 => (1, i, j, k + 1),
            8 => (2, i, j, k),
            9 => (2, i + 1, j, k),
            10 => (2, i + 1, j + 1, k),
            _ => (2, i, j + 1, k),
        }
    }

    let mut corner_values = [0.0f64; 8];
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let corners = [
                    (i, j, k),
                    (i + 1, j, k),
                    (i + 1, j + 1, k),
                    (i, j + 1, k),
                    (i, j, k + 1),
                    (i + 1, j, k + 1),
                    (i + 1, j + 1, k + 1),
                    (i, j + 1, k + 1),
                ];
                let mut case = 0usize;
                for (c, &(ci, cj, ck)) in corners.iter().enumerate() {
                    corner_values[c] = grid.value(ci, cj, ck);
                    if corner_values[c] < iso {
                        case |= 1 << c;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                let tri = &TRI_TABLE[case];
                let mut t = 0;
                while tri[t] >= 0 {
                    let mut ids = [0u32; 3];
                    for (slot, id) in ids.iter_mut().enumerate() {
                        let e = tri[t + slot] as usize;
                        debug_assert!({
                            let [a, b] = EDGE_CORNERS[e];
                            (corner_values[a] < iso) != (corner_values[b] < iso)
                        });
                        let (axis, bi, bj, bk) = edge_key(e, i, j, k);
                        *id = pool.vertex_on(axis, bi, bj, bk);
                    }
                    if ids[0] != ids[1] && ids[1] != ids[2] && ids[0] != ids[2] {
                        triangles.push(ids);
                    }
                    t += 3;
                }
            }
        }
    }

    let mut mesh = SurfaceMesh {
        vertices: pool.vertices,
        triangles,
    };
    // Cleanup: drop exactly degenerate faces (coincident crossings).
    mesh.triangles.retain(|t| {
        let (a, b, c) = (
            mesh.vertices[t[0] as usize],
            mesh.vertices[t[1] as usize],
            mesh.vertices[t[2] as usize],
        );
        a != b && b != c && a != c
    });
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::grid_from_fn;

    #[allow(unused_imports)]
    use num_traits::Float;

    fn sphere_grid(r: f64, res: usize) -> ScalarGrid {
        grid_from_fn(
            3,
            [-1.0, -1.0, -1.0],
            [1.0, 1.0, 1.0],
            [res, res, res],
            |p: &[f64]| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - r,
        )
    }

    #[test]
    fn sphere_mesh_is_watertight_with_small_radius_error() {
        let grid = sphere_grid(0.5, 64);
        let mesh = marching_cubes(&grid, 0.0);
        assert!(!mesh.is_empty());
        assert!(mesh.is_watertight());
        let cell_diag = 3.0f64.sqrt() * grid.spacing(0);
        for v in &mesh.vertices {
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!((r - 0.5).abs() <= 1.5 * cell_diag, "radius {r}");
        }
    }

    #[test]
    fn sphere_area_converges() {
        let grid = sphere_grid(0.5, 128);
        let mesh = marching_cubes(&grid, 0.0);
        let want = 4.0 * core::f64::consts::PI * 0.25;
        let got = mesh.total_area();
        assert!(
            (got - want).abs() / want <= 0.05,
            "area {got} vs analytic {want}"
        );
    }

    #[test]
    fn all_negative_grid_gives_empty_mesh() {
        let grid = grid_from_fn(
            3,
            [0.0, 0.0, 0.0],
            [1.0, 1.0, 1.0],
            [8, 8, 8],
            |_: &[f64]| -1.0,
        );
        assert!(marching_cubes(&grid, 0.0).is_empty());
    }

    #[test]
    fn vertices_interpolate_to_zero() {
        let grid = sphere_grid(0.43, 32);
        let mesh = marching_cubes(&grid, 0.0);
        for v in &mesh.vertices {
            assert!(grid.interpolate(*v).abs() <= 1e-9);
        }
    }

    #[test]
    fn sign_flip_preserves_the_vertex_set() {
        let grid = sphere_grid(0.5, 24);
        let mut flipped = grid.clone();
        for v in &mut flipped.values {
            *v = -*v;
        }
        let a = marching_cubes(&grid, 0.0);
        let b = marching_cubes(&flipped, 0.0);
        let key = |p: &crate::linalg::Point| (p[0].to_bits(), p[1].to_bits(), p[2].to_bits());
        let mut pa: Vec<_> = a.vertices.iter().map(key).collect();
        let mut pb: Vec<_> = b.vertices.iter().map(key).collect();
        pa.sort_unstable();
        pb.sort_unstable();
        assert_eq!(pa, pb);
    }
}
