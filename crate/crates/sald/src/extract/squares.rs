//! Marching squares over a 2D scalar grid.
//!
//! Cell corners are numbered counterclockwise from the lower-left; a
//! corner is "inside" when its value is below the iso level. Each
//! crossing cell emits directed segments with the inside region on the
//! left, so chains assemble head-to-tail and closed curves wind
//! counterclockwise around negative regions.
//!
//! The two saddle configurations are ambiguous. They are resolved by the
//! field value at the cell center — the caller's sampler when provided,
//! otherwise the bilinear center (the mean of the four corners), which is
//! the fixed convention.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{Chain, Polyline, ScalarGrid};
use crate::linalg::Point;

/// Extracts the iso-level curves with the fixed ambiguity convention.
pub fn marching_squares(grid: &ScalarGrid, iso: f64) -> Polyline {
    run(grid, iso, None)
}

/// Extracts the iso-level curves, resolving ambiguous cells by sampling
/// the underlying field at cell centers.
pub fn marching_squares_with_sampler<F>(grid: &ScalarGrid, iso: f64, mut sampler: F) -> Polyline
where
    F: FnMut(f64, f64) -> f64,
{
    run(grid, iso, Some(&mut sampler))
}

// Directed crossing segments (from-edge, to-edge) per corner-occupancy
// case; edges are 0 bottom, 1 right, 2 top, 3 left. The ambiguous cases
// 5 and 10 are handled separately.
const CASES: [&[(u8, u8)]; 16] = [
    &[],
    &[(0, 3)],
    &[(1, 0)],
    &[(1, 3)],
    &[(2, 1)],
    &[],
    &[(2, 0)],
    &[(2, 3)],
    &[(3, 2)],
    &[(0, 2)],
    &[],
    &[(1, 2)],
    &[(3, 1)],
    &[(0, 1)],
    &[(3, 0)],
    &[],
];

/// Canonical crossing vertex per grid edge, keyed by `(axis, i, j)`.
struct VertexPool<'g> {
    grid: &'g ScalarGrid,
    iso: f64,
    vertices: Vec<Point>,
    by_edge: BTreeMap<(u8, u32, u32), u32>,
}

impl VertexPool<'_> {
    fn vertex_on(&mut self, axis: u8, i: usize, j: usize) -> u32 {
        let grid = self.grid;
        let iso = self.iso;
        let vertices = &mut self.vertices;
        *self
            .by_edge
            .entry((axis, i as u32, j as u32))
            .or_insert_with(|| {
                let (v0, v1, p0, p1) = if axis == 0 {
                    (
                        grid.value(i, j, 0),
                        grid.value(i + 1, j, 0),
                        grid.node_pos(i, j, 0),
                        grid.node_pos(i + 1, j, 0),
                    )
                } else {
                    (
                        grid.value(i, j, 0),
                        grid.value(i, j + 1, 0),
                        grid.node_pos(i, j, 0),
                        grid.node_pos(i, j + 1, 0),
                    )
                };
                let t = (iso - v0) / (v1 - v0);
                let id = vertices.len() as u32;
                vertices.push([
                    p0[0] + t * (p1[0] - p0[0]),
                    p0[1] + t * (p1[1] - p0[1]),
                    0.0,
                ]);
                id
            })
    }
}

fn run(grid: &ScalarGrid, iso: f64, mut sampler: Option<&mut dyn FnMut(f64, f64) -> f64>) -> Polyline {
    assert_eq!(grid.dim, 2, "marching squares needs a 2D grid");
    let (nx, ny) = (grid.res[0], grid.res[1]);

    let mut pool = VertexPool {
        grid,
        iso,
        vertices: Vec::new(),
        by_edge: BTreeMap::new(),
    };
    let mut segments: Vec<(u32, u32)> = Vec::new();

    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let inside = [
                grid.value(i, j, 0) < iso,
                grid.value(i + 1, j, 0) < iso,
                grid.value(i + 1, j + 1, 0) < iso,
                grid.value(i, j + 1, 0) < iso,
            ];
            let case = inside
                .iter()
                .enumerate()
                .fold(0usize, |acc, (b, &s)| acc | ((s as usize) << b));
            if case == 0 || case == 15 {
                continue;
            }
            // Edge -> canonical grid edge of this cell.
            let edge_key = |e: u8| -> (u8, usize, usize) {
                match e {
                    0 => (0, i, j),
                    1 => (1, i + 1, j),
                    2 => (0, i, j + 1),
                    _ => (1, i, j),
                }
            };
            let pairs: &[(u8, u8)] = match case {
                5 | 10 => {
                    let center = match sampler.as_mut() {
                        Some(f) => {
                            let c = grid.node_pos(i, j, 0);
                            f(c[0] + 0.5 * grid.spacing(0), c[1] + 0.5 * grid.spacing(1))
                        }
                        None => {
                            (grid.value(i, j, 0)
                                + grid.value(i + 1, j, 0)
                                + grid.value(i + 1, j + 1, 0)
                                + grid.value(i, j + 1, 0))
                                / 4.0
                        }
                    };
                    let center_inside = center < iso;
                    match (case, center_inside) {
                        (5, true) => &[(0, 1), (2, 3)],
                        (5, false) => &[(0, 3), (2, 1)],
                        (10, true) => &[(1, 2), (3, 0)],
                        (10, false) => &[(1, 0), (3, 2)],
                        _ => unreachable!(),
                    }
                }
                c => CASES[c],
            };
            for &(from, to) in pairs {
                let (a0, i0, j0) = edge_key(from);
                let (a1, i1, j1) = edge_key(to);
                let va = pool.vertex_on(a0, i0, j0);
                let vb = pool.vertex_on(a1, i1, j1);
                if va != vb && pool.vertices[va as usize] != pool.vertices[vb as usize] {
                    segments.push((va, vb));
                }
            }
        }
    }

    assemble_chains(&pool.vertices, &segments)
}

fn assemble_chains(vertices: &[Point], segments: &[(u32, u32)]) -> Polyline {
    let mut next: BTreeMap<u32, u32> = BTreeMap::new();
    let mut has_incoming: BTreeMap<u32, bool> = BTreeMap::new();
    for &(a, b) in segments {
        next.insert(a, b);
        has_incoming.insert(b, true);
        has_incoming.entry(a).or_insert(false);
    }
    let mut chains = Vec::new();
    let mut visited: BTreeMap<u32, bool> = BTreeMap::new();

    // Open chains start at vertices with no incoming segment.
    let starts: Vec<u32> = has_incoming
        .iter()
        .filter(|(_, &inc)| !inc)
        .map(|(&v, _)| v)
        .collect();
    for start in starts {
        if visited.get(&start).copied().unwrap_or(false) {
            continue;
        }
        chains.push(walk(start, vertices, &next, &mut visited, false));
    }
    // Remaining segments form closed loops.
    let loop_starts: Vec<u32> = next.keys().copied().collect();
    for start in loop_starts {
        if visited.get(&start).copied().unwrap_or(false) {
            continue;
        }
        chains.push(walk(start, vertices, &next, &mut visited, true));
    }
    Polyline { chains }
}

fn walk(
    start: u32,
    vertices: &[Point],
    next: &BTreeMap<u32, u32>,
    visited: &mut BTreeMap<u32, bool>,
    closed: bool,
) -> Chain {
    let mut points = Vec::new();
    let mut cur = start;
    loop {
        visited.insert(cur, true);
        let p = vertices[cur as usize];
        if points.last() != Some(&p) {
            points.push(p);
        }
        match next.get(&cur) {
            Some(&n) if n == start => break,
            Some(&n) if !visited.get(&n).copied().unwrap_or(false) => cur = n,
            _ => break,
        }
    }
    Chain { points, closed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::grid_from_fn;

    fn circle_grid(r: f64, res: usize) -> ScalarGrid {
        grid_from_fn(
            2,
            [-1.0, -1.0, 0.0],
            [1.0, 1.0, 0.0],
            [res, res, 1],
            |p: &[f64]| (p[0] * p[0] + p[1] * p[1]).sqrt() - r,
        )
    }

    #[test]
    fn circle_vertices_lie_near_the_radius() {
        let grid = circle_grid(0.5, 128);
        let curves = marching_squares(&grid, 0.0);
        assert!(!curves.is_empty());
        let cell_diag = (grid.spacing(0).powi(2) + grid.spacing(1).powi(2)).sqrt();
        for chain in &curves.chains {
            for p in &chain.points {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                assert!((r - 0.5).abs() <= 1.5 * cell_diag, "radius {r}");
            }
        }
    }

    #[test]
    fn closed_field_gives_one_closed_chain() {
        let grid = circle_grid(0.5, 64);
        let curves = marching_squares(&grid, 0.0);
        assert_eq!(curves.chains.len(), 1);
        assert!(curves.chains[0].closed);
        // Consecutive points are distinct.
        for w in curves.chains[0].points.windows(2) {
            assert_ne!(w[0], w[1]);
        }
    }

    #[test]
    fn all_positive_grid_extracts_nothing() {
        let grid = grid_from_fn(2, [0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [16, 16, 1], |_| 1.0);
        assert!(marching_squares(&grid, 0.0).is_empty());
    }

    #[test]
    fn vertices_interpolate_to_the_iso_level() {
        let grid = circle_grid(0.37, 96);
        let curves = marching_squares(&grid, 0.0);
        for chain in &curves.chains {
            for p in &chain.points {
                assert!(grid.interpolate(*p).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn sign_flip_preserves_the_vertex_set() {
        let grid = circle_grid(0.5, 48);
        let mut flipped = grid.clone();
        for v in &mut flipped.values {
            *v = -*v;
        }
        let a = marching_squares(&grid, 0.0);
        let b = marching_squares(&flipped, 0.0);
        let mut pa: Vec<_> = a
            .chains
            .iter()
            .flat_map(|c| c.points.iter().map(|p| (p[0].to_bits(), p[1].to_bits())))
            .collect();
        let mut pb: Vec<_> = b
            .chains
            .iter()
            .flat_map(|c| c.points.iter().map(|p| (p[0].to_bits(), p[1].to_bits())))
            .collect();
        pa.sort_unstable();
        pb.sort_unstable();
        assert_eq!(pa, pb);
    }

    #[test]
    fn sampler_resolves_saddles() {
        // Field x*y has a saddle at the origin; with a one-cell grid the
        // corner mean is 0 but the true center value decides the pairing.
        let grid = grid_from_fn(2, [-1.0, -1.0, 0.0], [1.0, 1.0, 0.0], [2, 2, 1], |p: &[f64]| {
            p[0] * p[1] + 0.1
        });
        let with = marching_squares_with_sampler(&grid, 0.0, |x, y| x * y + 0.1);
        let without = marching_squares(&grid, 0.0);
        assert_eq!(with.chains.len(), 2);
        assert_eq!(without.chains.len(), 2);
    }
}
