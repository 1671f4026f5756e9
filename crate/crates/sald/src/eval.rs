//! Reconstruction quality metrics: Chamfer and normal-angle distances
//! under area-weighted surface sampling.

use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::extract::{Polyline, SurfaceMesh};
use crate::geometry::knn::KdTree3;
use crate::geometry::RawGeometry;
use crate::linalg::{dist, dot3, norm3, Point};

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    EmptyInput,
    ZeroNormal,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyInput => write!(f, "empty point set or mesh"),
            Self::ZeroNormal => write!(f, "zero-length normal"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvalError {}

/// Points sampled from a surface, each carrying its source-face normal.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSurface {
    pub points: Vec<Point>,
    pub normals: Vec<Point>,
}

/// Area-weighted uniform sample of `n` points from the mesh.
pub fn sample_surface(mesh: &SurfaceMesh, n: usize, seed: u64) -> Result<SampledSurface, EvalError> {
    if mesh.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut acc = 0.0;
    for t in 0..mesh.triangles.len() {
        acc += mesh.face_area(t);
        cumulative.push(acc);
    }
    if acc <= 0.0 {
        return Err(EvalError::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng.random::<f64>() * acc;
        let t = match cumulative.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => (i + 1).min(cumulative.len() - 1),
            Err(i) => i,
        };
        let [ia, ib, ic] = mesh.triangles[t];
        let (a, b, c) = (
            mesh.vertices[ia as usize],
            mesh.vertices[ib as usize],
            mesh.vertices[ic as usize],
        );
        let r1 = rng.random::<f64>().sqrt();
        let r2 = rng.random::<f64>();
        let (w1, w2) = (r1 * (1.0 - r2), r1 * r2);
        points.push([
            a[0] + w1 * (b[0] - a[0]) + w2 * (c[0] - a[0]),
            a[1] + w1 * (b[1] - a[1]) + w2 * (c[1] - a[1]),
            a[2] + w1 * (b[2] - a[2]) + w2 * (c[2] - a[2]),
        ]);
        normals.push(mesh.face_normal(t).ok_or(EvalError::ZeroNormal)?);
    }
    Ok(SampledSurface { points, normals })
}

/// Length-weighted uniform sample of `n` points from 2D level curves.
pub fn sample_polyline(curves: &Polyline, n: usize, seed: u64) -> Result<Vec<Point>, EvalError> {
    let mut segs: Vec<(Point, Point)> = Vec::new();
    for chain in &curves.chains {
        for w in chain.points.windows(2) {
            segs.push((w[0], w[1]));
        }
        if chain.closed && chain.points.len() > 1 {
            segs.push((*chain.points.last().unwrap(), chain.points[0]));
        }
    }
    if segs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut cumulative = Vec::with_capacity(segs.len());
    let mut acc = 0.0;
    for (a, b) in &segs {
        acc += dist(*a, *b);
        cumulative.push(acc);
    }
    if acc <= 0.0 {
        return Err(EvalError::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng.random::<f64>() * acc;
        let s = match cumulative.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => (i + 1).min(cumulative.len() - 1),
            Err(i) => i,
        };
        let (a, b) = segs[s];
        let t = rng.random::<f64>();
        points.push([
            a[0] + t * (b[0] - a[0]),
            a[1] + t * (b[1] - a[1]),
            0.0,
        ]);
    }
    Ok(points)
}

/// One-sided Chamfer distance: the mean over `a` of the exact nearest
/// distance to `b`.
pub fn chamfer_one_sided(a: &[Point], b: &[Point]) -> Result<f64, EvalError> {
    if a.is_empty() || b.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let tree = KdTree3::build(b.to_vec());
    let mut sum = 0.0;
    for p in a {
        sum += tree.nearest(*p).1.sqrt();
    }
    Ok(sum / a.len() as f64)
}

/// One-sided Chamfer distance against raw geometry (exact primitive
/// distances instead of a point-set proxy).
pub fn chamfer_one_sided_to_geometry(a: &[Point], geom: &RawGeometry) -> Result<f64, EvalError> {
    if a.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut sum = 0.0;
    for p in a {
        sum += geom.nearest_point(*p).distance;
    }
    Ok(sum / a.len() as f64)
}

/// One-sided normal distance, in radians: the mean positive angle between
/// a sample's normal and the normal at its nearest point on the other
/// sampled surface.
pub fn normal_one_sided(a: &SampledSurface, b: &SampledSurface) -> Result<f64, EvalError> {
    if a.points.is_empty() || b.points.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let tree = KdTree3::build(b.points.clone());
    let mut sum = 0.0;
    for (p, n) in a.points.iter().zip(&a.normals) {
        let (idx, _) = tree.nearest(*p);
        let m = b.normals[idx];
        let (nn, nm) = (norm3(*n), norm3(m));
        if nn == 0.0 || nm == 0.0 {
            return Err(EvalError::ZeroNormal);
        }
        sum += (dot3(*n, m) / (nn * nm)).clamp(-1.0, 1.0).acos();
    }
    Ok(sum / a.points.len() as f64)
}

/// Symmetric and one-sided Chamfer (world units) and normal-angle
/// (degrees) distances between two sampled surfaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub chamfer_sym: f64,
    pub chamfer_a_to_b: f64,
    pub chamfer_b_to_a: f64,
    pub normal_sym_deg: f64,
    pub normal_a_to_b_deg: f64,
    pub normal_b_to_a_deg: f64,
}

/// Fills a [`MetricReport`] by sampling `n` points from each mesh.
///
/// Both sides use the same sampling seed, so comparing a mesh against
/// itself gives exact zeros rather than sampling noise.
pub fn metric_report(
    recon: &SurfaceMesh,
    reference: &SurfaceMesh,
    n: usize,
    seed: u64,
) -> Result<MetricReport, EvalError> {
    let a = sample_surface(recon, n, seed)?;
    let b = sample_surface(reference, n, seed)?;
    report_from_samples(&a, &b)
}

/// [`metric_report`] over pre-sampled surfaces (e.g. a scan given as
/// points with normals).
pub fn report_from_samples(
    a: &SampledSurface,
    b: &SampledSurface,
) -> Result<MetricReport, EvalError> {
    let deg = 180.0 / core::f64::consts::PI;
    let chamfer_a_to_b = chamfer_one_sided(&a.points, &b.points)?;
    let chamfer_b_to_a = chamfer_one_sided(&b.points, &a.points)?;
    let normal_a_to_b_deg = normal_one_sided(a, b)? * deg;
    let normal_b_to_a_deg = normal_one_sided(b, a)? * deg;
    Ok(MetricReport {
        chamfer_sym: 0.5 * (chamfer_a_to_b + chamfer_b_to_a),
        chamfer_a_to_b,
        chamfer_b_to_a,
        normal_sym_deg: 0.5 * (normal_a_to_b_deg + normal_b_to_a_deg),
        normal_a_to_b_deg,
        normal_b_to_a_deg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn unit_square_mesh() -> SurfaceMesh {
        SurfaceMesh {
            vertices: alloc::vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
            ],
            triangles: alloc::vec![[0, 1, 2], [0, 2, 3]],
        }
    }

    #[test]
    fn chamfer_trivial_cases() {
        let a = alloc::vec![[0.0, 0.0, 0.0]];
        let b = alloc::vec![[1.0, 0.0, 0.0]];
        assert_eq!(chamfer_one_sided(&a, &b).unwrap(), 1.0);
        assert_eq!(chamfer_one_sided(&a, &a).unwrap(), 0.0);
        assert!(chamfer_one_sided(&a, &[]).is_err());
    }

    #[test]
    fn chamfer_matches_brute_force_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let mut cloud = |n: usize| -> Vec<Point> {
            (0..n)
                .map(|_| {
                    [
                        rng.random::<f64>() * 2.0 - 1.0,
                        rng.random::<f64>() * 2.0 - 1.0,
                        rng.random::<f64>() * 2.0 - 1.0,
                    ]
                })
                .collect()
        };
        let a = cloud(431);
        let b = cloud(377);
        let fast = chamfer_one_sided(&a, &b).unwrap();
        let mut sum = 0.0;
        for p in &a {
            let mut best = f64::INFINITY;
            for q in &b {
                best = best.min(crate::linalg::dist_sq(*p, *q));
            }
            sum += best.sqrt();
        }
        let brute = sum / a.len() as f64;
        assert_eq!(fast.to_bits(), brute.to_bits());
    }

    #[test]
    fn chamfer_is_rigid_motion_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<Point> = (0..100)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let b: Vec<Point> = (0..80)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let base = chamfer_one_sided(&a, &b).unwrap();
        // Joint rotation about z plus a translation.
        let (s, c) = (0.6f64.sin(), 0.6f64.cos());
        let motion = |p: &Point| -> Point {
            [
                c * p[0] - s * p[1] + 10.0,
                s * p[0] + c * p[1] - 3.0,
                p[2] + 0.5,
            ]
        };
        let am: Vec<Point> = a.iter().map(&motion).collect();
        let bm: Vec<Point> = b.iter().map(&motion).collect();
        let moved = chamfer_one_sided(&am, &bm).unwrap();
        assert!((base - moved).abs() < 1e-9);
    }

    #[test]
    fn surface_sampling_is_area_weighted() {
        // Two triangles of areas 0.5 and 0.5 in the unit square, then a
        // skewed mesh with 4:1 areas.
        let mesh = SurfaceMesh {
            vertices: alloc::vec![
                [0.0, 0.0, 0.0],
                [4.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [-1.0, 0.0, 0.0],
                [0.0, -0.5, 0.0],
            ],
            triangles: alloc::vec![[0, 1, 2], [0, 3, 4]],
        };
        let n = 10_000;
        let s = sample_surface(&mesh, n, 9).unwrap();
        let in_big = s
            .points
            .iter()
            .filter(|p| p[0] >= 0.0 && p[1] >= 0.0)
            .count();
        let frac = in_big as f64 / n as f64;
        let want = 2.0 / 2.25;
        assert!((frac - want).abs() / want < 0.05, "fraction {frac}");
    }

    #[test]
    fn single_triangle_normals_are_identical() {
        let mesh = SurfaceMesh {
            vertices: alloc::vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            triangles: alloc::vec![[0, 1, 2]],
        };
        let s = sample_surface(&mesh, 100, 5).unwrap();
        assert!(s.normals.iter().all(|n| *n == [0.0, 0.0, 1.0]));
        // Seed-fixed determinism.
        let s2 = sample_surface(&mesh, 100, 5).unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn normal_distance_of_flipped_plane_is_pi() {
        let mesh = unit_square_mesh();
        let a = sample_surface(&mesh, 500, 1).unwrap();
        let mut b = a.clone();
        for n in &mut b.normals {
            *n = [-n[0], -n[1], -n[2]];
        }
        let d = normal_one_sided(&a, &b).unwrap();
        assert!((d - core::f64::consts::PI).abs() < 1e-12);
        assert_eq!(normal_one_sided(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn normal_distance_matches_brute_force_pairing() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut surf = |n: usize| {
            let points: Vec<Point> = (0..n)
                .map(|_| [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()])
                .collect();
            let normals: Vec<Point> = (0..n)
                .map(|_| {
                    let v = crate::loss::random_unit(&mut rng, 3);
                    [v[0], v[1], v[2]]
                })
                .collect();
            SampledSurface { points, normals }
        };
        let a = surf(100);
        let b = surf(100);
        let fast = normal_one_sided(&a, &b).unwrap();
        let mut sum = 0.0;
        for (p, n) in a.points.iter().zip(&a.normals) {
            let mut best = (f64::INFINITY, 0usize);
            for (i, q) in b.points.iter().enumerate() {
                let d = crate::linalg::dist_sq(*p, *q);
                if d < best.0 {
                    best = (d, i);
                }
            }
            sum += dot3(*n, b.normals[best.1]).clamp(-1.0, 1.0).acos();
        }
        let brute = sum / 100.0;
        assert!((fast - brute).abs() < 1e-12);
    }

    #[test]
    fn self_report_is_near_zero_and_symmetrization_holds() {
        let mesh = unit_square_mesh();
        let r = metric_report(&mesh, &mesh, 30_000, 7).unwrap();
        assert!(r.chamfer_sym <= 1e-3, "self chamfer {}", r.chamfer_sym);
        assert!(r.normal_sym_deg <= 1e-9);
        assert_eq!(
            r.chamfer_sym,
            0.5 * (r.chamfer_a_to_b + r.chamfer_b_to_a)
        );
        assert_eq!(
            r.normal_sym_deg,
            0.5 * (r.normal_a_to_b_deg + r.normal_b_to_a_deg)
        );
    }

    use rand_chacha::ChaCha8Rng;
}
