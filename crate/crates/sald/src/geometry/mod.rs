//! Raw geometry, exact unsigned distance queries, and training samples.
//!
//! A [`RawGeometry`] is an immutable soup of primitives — 2D segments,
//! 3D triangles, or a 3D point cloud — indexed for nearest-primitive
//! queries at construction. No connectivity, orientation, or sign
//! information is assumed or derived; the whole point of the training
//! losses downstream is to work without it.

mod bvh;
pub mod kernels;
pub mod knn;
mod sample;

use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{scale, sub, Point};
use bvh::{Aabb, Bvh};
pub use kernels::{Segment2, Triangle3};
pub use sample::{sample_training_set, SampleParams};

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    EmptyGeometry,
    DimensionMismatch { expected: usize, got: usize },
    NonFinite,
    DegeneratePrimitive { index: usize },
    /// Gradient direction undefined (query coincides with a cloud point).
    DegenerateGradient,
    NotEnoughSurfaceSamples { needed: usize, got: usize },
    /// Grad samples need an oriented primitive; point clouds have none.
    NoRepresentativeNormal,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyGeometry => write!(f, "empty geometry"),
            Self::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Self::NonFinite => write!(f, "non-finite coordinate"),
            Self::DegeneratePrimitive { index } => {
                write!(f, "primitive {index} has zero length/area")
            }
            Self::DegenerateGradient => write!(f, "gradient undefined at this point"),
            Self::NotEnoughSurfaceSamples { needed, got } => {
                write!(f, "need at least {needed} surface samples, got {got}")
            }
            Self::NoRepresentativeNormal => {
                write!(f, "point clouds carry no representative normals")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GeometryError {}

#[derive(Debug)]
enum PrimSet {
    Segments(Vec<Segment2>),
    Triangles(Vec<Triangle3>),
    Points(Vec<Point>),
}

/// Raw input geometry with an acceleration index.
///
/// Immutable after construction; distance queries are safe to run
/// concurrently.
#[derive(Debug)]
pub struct RawGeometry {
    dim: usize,
    prims: PrimSet,
    index: Bvh,
    /// Cumulative primitive measure (length/area/count) for uniform sampling.
    cumulative: Vec<f64>,
}

/// Result of a nearest-primitive query.
#[derive(Debug, Clone, Copy)]
pub struct Nearest {
    pub distance: f64,
    pub point: Point,
    pub primitive: usize,
}

impl RawGeometry {
    pub fn from_segments(segments: Vec<Segment2>) -> Result<Self, GeometryError> {
        if segments.is_empty() {
            return Err(GeometryError::EmptyGeometry);
        }
        let mut boxes = Vec::with_capacity(segments.len());
        for (i, s) in segments.iter().enumerate() {
            if !s.a.iter().chain(&s.b).all(|c| c.is_finite()) {
                return Err(GeometryError::NonFinite);
            }
            if s.length() == 0.0 {
                return Err(GeometryError::DegeneratePrimitive { index: i });
            }
            boxes.push(Aabb::of_points(&[s.a, s.b]));
        }
        let index = Bvh::build(&boxes);
        let cumulative = cumulative_measure(segments.iter().map(|s| s.length()));
        Ok(Self {
            dim: 2,
            prims: PrimSet::Segments(segments),
            index,
            cumulative,
        })
    }

    pub fn from_triangles(triangles: Vec<Triangle3>) -> Result<Self, GeometryError> {
        if triangles.is_empty() {
            return Err(GeometryError::EmptyGeometry);
        }
        let mut boxes = Vec::with_capacity(triangles.len());
        for (i, t) in triangles.iter().enumerate() {
            if !t.a.iter().chain(&t.b).chain(&t.c).all(|c| c.is_finite()) {
                return Err(GeometryError::NonFinite);
            }
            if t.area() == 0.0 {
                return Err(GeometryError::DegeneratePrimitive { index: i });
            }
            boxes.push(Aabb::of_points(&[t.a, t.b, t.c]));
        }
        let index = Bvh::build(&boxes);
        let cumulative = cumulative_measure(triangles.iter().map(|t| t.area()));
        Ok(Self {
            dim: 3,
            prims: PrimSet::Triangles(triangles),
            index,
            cumulative,
        })
    }

    pub fn from_points(points: Vec<Point>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::EmptyGeometry);
        }
        if !points.iter().flatten().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let boxes: Vec<Aabb> = points.iter().map(|p| Aabb { min: *p, max: *p }).collect();
        let index = Bvh::build(&boxes);
        let cumulative = cumulative_measure(points.iter().map(|_| 1.0));
        Ok(Self {
            dim: 3,
            prims: PrimSet::Points(points),
            index,
            cumulative,
        })
    }

    /// Ambient dimension (2 or 3).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_primitives(&self) -> usize {
        match &self.prims {
            PrimSet::Segments(s) => s.len(),
            PrimSet::Triangles(t) => t.len(),
            PrimSet::Points(p) => p.len(),
        }
    }

    pub fn segments(&self) -> Option<&[Segment2]> {
        match &self.prims {
            PrimSet::Segments(s) => Some(s),
            _ => None,
        }
    }

    pub fn triangles(&self) -> Option<&[Triangle3]> {
        match &self.prims {
            PrimSet::Triangles(t) => Some(t),
            _ => None,
        }
    }

    /// Checks a query point and pads it to `[f64; 3]`.
    fn check(&self, y: &[f64]) -> Result<Point, GeometryError> {
        if y.len() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        if !y.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let mut p = [0.0; 3];
        p[..y.len()].copy_from_slice(y);
        Ok(p)
    }

    /// Exact nearest point on the geometry; ties pick the lowest
    /// primitive index.
    pub fn nearest_point(&self, q: Point) -> Nearest {
        let (prim, d2) = match &self.prims {
            PrimSet::Segments(s) => self
                .index
                .nearest(q, |i| crate::linalg::dist_sq(s[i].closest_point(q), q)),
            PrimSet::Triangles(t) => self
                .index
                .nearest(q, |i| crate::linalg::dist_sq(t[i].closest_point(q), q)),
            PrimSet::Points(p) => self.index.nearest(q, |i| crate::linalg::dist_sq(p[i], q)),
        };
        let point = match &self.prims {
            PrimSet::Segments(s) => s[prim].closest_point(q),
            PrimSet::Triangles(t) => t[prim].closest_point(q),
            PrimSet::Points(p) => p[prim],
        };
        Nearest {
            distance: d2.sqrt(),
            point,
            primitive: prim,
        }
    }

    /// Unsigned distance `h(y)`: the exact minimum distance from `y` to
    /// the union of primitives.
    pub fn unsigned_distance(&self, y: &[f64]) -> Result<f64, GeometryError> {
        Ok(self.nearest_point(self.check(y)?).distance)
    }

    /// Closest-point projection of `y` onto the geometry.
    pub fn project(&self, y: &[f64]) -> Result<Point, GeometryError> {
        Ok(self.nearest_point(self.check(y)?).point)
    }

    /// Representative unit normal of primitive `index` under the fixed
    /// orientation convention (counterclockwise perpendicular for
    /// segments, right-hand rule for triangles).
    pub fn primitive_normal(&self, index: usize) -> Result<Point, GeometryError> {
        match &self.prims {
            PrimSet::Segments(s) => Ok(s[index].unit_normal()),
            PrimSet::Triangles(t) => Ok(t[index].unit_normal()),
            PrimSet::Points(_) => Err(GeometryError::NoRepresentativeNormal),
        }
    }

    /// Gradient of the unsigned distance at `y`.
    ///
    /// Away from the geometry this is `(y - project(y)) / h(y)`. On the
    /// geometry (within [`ON_SURFACE_EPS`]) the sub-differential is not a
    /// single direction; we return the representative normal of the
    /// nearest primitive, lowest index on ties.
    pub fn unsigned_gradient(&self, y: &[f64]) -> Result<Point, GeometryError> {
        let q = self.check(y)?;
        let near = self.nearest_point(q);
        if near.distance > ON_SURFACE_EPS {
            Ok(scale(sub(q, near.point), 1.0 / near.distance))
        } else {
            match self.primitive_normal(near.primitive) {
                Ok(n) => Ok(n),
                Err(GeometryError::NoRepresentativeNormal) => {
                    Err(GeometryError::DegenerateGradient)
                }
                Err(e) => Err(e),
            }
        }
    }

    /// Uniform point on the geometry by primitive measure, together with
    /// the primitive index it lies on.
    pub(crate) fn sample_uniform<R: rand::Rng>(&self, rng: &mut R) -> (Point, usize) {
        let total = *self.cumulative.last().unwrap();
        let u = rng.random::<f64>() * total;
        let prim = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&u).unwrap())
        {
            Ok(i) => (i + 1).min(self.cumulative.len() - 1),
            Err(i) => i,
        };
        let p = match &self.prims {
            PrimSet::Segments(s) => s[prim].point_at(rng.random::<f64>()),
            PrimSet::Triangles(t) => {
                // sqrt trick: uniform by area in barycentric coordinates
                let r1 = rng.random::<f64>().sqrt();
                let r2 = rng.random::<f64>();
                t[prim].point_at(r1 * (1.0 - r2), r1 * r2)
            }
            PrimSet::Points(p) => p[prim],
        };
        (p, prim)
    }

    /// Axis-aligned bounds of all primitives.
    pub fn bounds(&self) -> (Point, Point) {
        let mut b = Aabb::empty();
        match &self.prims {
            PrimSet::Segments(s) => {
                for seg in s {
                    b.grow(seg.a);
                    b.grow(seg.b);
                }
            }
            PrimSet::Triangles(t) => {
                for tri in t {
                    b.grow(tri.a);
                    b.grow(tri.b);
                    b.grow(tri.c);
                }
            }
            PrimSet::Points(p) => {
                for q in p {
                    b.grow(*q);
                }
            }
        }
        (b.min, b.max)
    }
}

/// Distances at or below this count as "on the geometry" for gradient
/// queries; the direction `(y - p)/h` is numerically meaningless there.
pub const ON_SURFACE_EPS: f64 = 1e-9;

fn cumulative_measure<I: Iterator<Item = f64>>(measures: I) -> Vec<f64> {
    let mut acc = 0.0;
    measures
        .map(|m| {
            acc += m;
            acc
        })
        .collect()
}

/// One unsigned-distance supervision sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueSample {
    pub point: Point,
    /// Unsigned distance of `point` to the geometry, exact at construction.
    pub h: f64,
}

/// One gradient supervision sample: a surface point with one arbitrary
/// representative of the two possible unit normals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradSample {
    pub point: Point,
    pub normal: Point,
}

/// Precomputed training samples for one shape.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleBatch {
    pub dim: usize,
    pub values: Vec<ValueSample>,
    pub grads: Vec<GradSample>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.values.len() + self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty() && self.grads.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn unit_circle_polyline(n: usize) -> RawGeometry {
        let segs: Vec<Segment2> = (0..n)
            .map(|i| {
                let t0 = core::f64::consts::TAU * i as f64 / n as f64;
                let t1 = core::f64::consts::TAU * (i + 1) as f64 / n as f64;
                Segment2::new([t0.cos(), t0.sin()], [t1.cos(), t1.sin()])
            })
            .collect();
        RawGeometry::from_segments(segs).unwrap()
    }

    #[test]
    fn two_point_distance() {
        let g = RawGeometry::from_points(vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap();
        assert_eq!(g.unsigned_distance(&[1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(g.unsigned_distance(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn empty_geometry_is_rejected() {
        assert_eq!(
            RawGeometry::from_segments(Vec::new()).unwrap_err(),
            GeometryError::EmptyGeometry
        );
    }

    #[test]
    fn projection_examples() {
        let g = RawGeometry::from_segments(vec![Segment2::new([0.0, 0.0], [2.0, 0.0])]).unwrap();
        assert_eq!(g.project(&[1.0, 1.0]).unwrap(), [1.0, 0.0, 0.0]);
        // A point on the geometry projects to itself.
        assert_eq!(g.project(&[0.5, 0.0]).unwrap(), [0.5, 0.0, 0.0]);
    }

    #[test]
    fn projection_tie_breaks_to_lowest_index() {
        let g = RawGeometry::from_segments(vec![
            Segment2::new([-1.0, 1.0], [1.0, 1.0]),
            Segment2::new([-1.0, -1.0], [1.0, -1.0]),
        ])
        .unwrap();
        // Equidistant between both segments.
        let n = g.nearest_point([0.25, 0.0, 0.0]);
        assert_eq!(n.primitive, 0);
        assert_eq!(n.point, [0.25, 1.0, 0.0]);
    }

    #[test]
    fn gradient_examples() {
        let g = RawGeometry::from_segments(vec![Segment2::new([0.0, 0.0], [2.0, 0.0])]).unwrap();
        assert_eq!(g.unsigned_gradient(&[1.0, 1.0]).unwrap(), [0.0, 1.0, 0.0]);
        assert_eq!(g.unsigned_gradient(&[1.0, -1.0]).unwrap(), [0.0, -1.0, 0.0]);
        // On the segment, the convention normal.
        assert_eq!(g.unsigned_gradient(&[1.0, 0.0]).unwrap(), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn distance_matches_brute_force_primitive_sampling() {
        let g = tests::unit_circle_polyline(17);
        let segs = g.segments().unwrap().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut tested = 0;
        while tested < 50 {
            let q = [
                rng.random::<f64>() * 4.0 - 2.0,
                rng.random::<f64>() * 4.0 - 2.0,
            ];
            let exact = g.unsigned_distance(&q).unwrap();
            // The sampled oracle's discretization error is
            // (spacing/2)^2 / (2h); keep h away from zero so the stated
            // tolerance is within the oracle's own accuracy.
            if exact < 0.15 {
                continue;
            }
            tested += 1;
            let mut brute = f64::INFINITY;
            for s in &segs {
                for i in 0..=1200 {
                    let p = s.point_at(i as f64 / 1200.0);
                    brute = brute.min(dist(p, [q[0], q[1], 0.0]));
                }
            }
            // Sampled points lie on the geometry, so brute >= exact.
            assert!(
                brute >= exact - 1e-12 && brute - exact < 1e-7,
                "exact {exact} brute {brute}"
            );
        }
    }

    #[test]
    fn projection_consistent_with_distance() {
        let g = tests::unit_circle_polyline(40);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let q = [
                rng.random::<f64>() * 4.0 - 2.0,
                rng.random::<f64>() * 4.0 - 2.0,
            ];
            let p = g.project(&q).unwrap();
            let h = g.unsigned_distance(&q).unwrap();
            assert!((dist(p, [q[0], q[1], 0.0]) - h).abs() < 1e-12);
            // p itself lies on the geometry.
            assert!(g.unsigned_distance(&[p[0], p[1]]).unwrap() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences_off_surface() {
        let g = tests::unit_circle_polyline(33);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let step = 1e-6;
        let mut tested = 0;
        while tested < 100 {
            let q = [
                rng.random::<f64>() * 3.0 - 1.5,
                rng.random::<f64>() * 3.0 - 1.5,
            ];
            let h = g.unsigned_distance(&q).unwrap();
            if h < 10.0 * step {
                continue;
            }
            tested += 1;
            let grad = g.unsigned_gradient(&q).unwrap();
            for k in 0..2 {
                let mut qp = q;
                let mut qm = q;
                qp[k] += step;
                qm[k] -= step;
                let fd = (g.unsigned_distance(&qp).unwrap() - g.unsigned_distance(&qm).unwrap())
                    / (2.0 * step);
                assert!(
                    (grad[k] - fd).abs() <= 1e-5 * grad[k].abs().max(1.0),
                    "grad {} vs fd {}",
                    grad[k],
                    fd
                );
            }
        }
    }

    #[test]
    fn unsigned_distance_is_lipschitz() {
        let g = tests::unit_circle_polyline(21);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let a = [
                rng.random::<f64>() * 4.0 - 2.0,
                rng.random::<f64>() * 4.0 - 2.0,
            ];
            let b = [
                rng.random::<f64>() * 4.0 - 2.0,
                rng.random::<f64>() * 4.0 - 2.0,
            ];
            let ha = g.unsigned_distance(&a).unwrap();
            let hb = g.unsigned_distance(&b).unwrap();
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            assert!((ha - hb).abs() <= d + 1e-9);
        }
    }

    #[test]
    fn gradient_is_unit_norm() {
        let g = tests::unit_circle_polyline(21);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..300 {
            let q = [
                rng.random::<f64>() * 4.0 - 2.0,
                rng.random::<f64>() * 4.0 - 2.0,
            ];
            let grad = g.unsigned_gradient(&q).unwrap();
            assert!((crate::linalg::norm3(grad) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn triangle_soup_queries() {
        // Unit right triangle in the z = 0 plane.
        let t = Triangle3::new([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let g = RawGeometry::from_triangles(vec![t]).unwrap();
        assert!((g.unsigned_distance(&[0.25, 0.25, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            g.unsigned_gradient(&[0.25, 0.25, 0.0]).unwrap(),
            [0.0, 0.0, 1.0]
        );
        let n = g.nearest_point([2.0, 2.0, 0.0]);
        // Clamped to the hypotenuse midpoint region.
        assert!((n.point[0] - 0.5).abs() < 1e-12 && (n.point[1] - 0.5).abs() < 1e-12);
    }
}
