//! Exact closest-point kernels for the supported primitive types.

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{add, cross, dot3, normalize, scale, sub, Point};

/// 2D line segment stored with `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment2 {
    pub a: Point,
    pub b: Point,
}

impl Segment2 {
    pub fn new(a: [f64; 2], b: [f64; 2]) -> Self {
        Self {
            a: [a[0], a[1], 0.0],
            b: [b[0], b[1], 0.0],
        }
    }

    pub fn length(&self) -> f64 {
        crate::linalg::dist(self.a, self.b)
    }

    /// Counterclockwise perpendicular of the segment direction.
    ///
    /// This is the fixed convention for the representative surface normal;
    /// the sign-agnostic losses are invariant to the choice.
    pub fn unit_normal(&self) -> Point {
        let d = sub(self.b, self.a);
        normalize([-d[1], d[0], 0.0]).expect("segment has nonzero length")
    }

    pub fn closest_point(&self, q: Point) -> Point {
        let d = sub(self.b, self.a);
        let len_sq = dot3(d, d);
        let t = (dot3(sub(q, self.a), d) / len_sq).clamp(0.0, 1.0);
        add(self.a, scale(d, t))
    }

    pub fn point_at(&self, t: f64) -> Point {
        add(self.a, scale(sub(self.b, self.a), t))
    }
}

/// 3D triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle3 {
    pub a: Point,
    pub b: Point,
    pub c: Point,
}

impl Triangle3 {
    pub fn new(a: Point, b: Point, c: Point) -> Self {
        Self { a, b, c }
    }

    pub fn area(&self) -> f64 {
        0.5 * crate::linalg::norm3(cross(sub(self.b, self.a), sub(self.c, self.a)))
    }

    /// Right-hand-rule unit normal from the stored vertex order.
    pub fn unit_normal(&self) -> Point {
        normalize(cross(sub(self.b, self.a), sub(self.c, self.a)))
            .expect("triangle has nonzero area")
    }

    /// Closest point on the triangle to `q`.
    ///
    /// Region-based case analysis over the vertex/edge/face Voronoi regions
    /// (Ericson, Real-Time Collision Detection §5.1.5).
    pub fn closest_point(&self, q: Point) -> Point {
        let ab = sub(self.b, self.a);
        let ac = sub(self.c, self.a);
        let ap = sub(q, self.a);

        let d1 = dot3(ab, ap);
        let d2 = dot3(ac, ap);
        if d1 <= 0.0 && d2 <= 0.0 {
            return self.a;
        }

        let bp = sub(q, self.b);
        let d3 = dot3(ab, bp);
        let d4 = dot3(ac, bp);
        if d3 >= 0.0 && d4 <= d3 {
            return self.b;
        }

        let vc = d1 * d4 - d3 * d2;
        if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
            let v = d1 / (d1 - d3);
            return add(self.a, scale(ab, v));
        }

        let cp = sub(q, self.c);
        let d5 = dot3(ab, cp);
        let d6 = dot3(ac, cp);
        if d6 >= 0.0 && d5 <= d6 {
            return self.c;
        }

        let vb = d5 * d2 - d1 * d6;
        if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
            let w = d2 / (d2 - d6);
            return add(self.a, scale(ac, w));
        }

        let va = d3 * d6 - d5 * d4;
        if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
            let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
            return add(self.b, scale(sub(self.c, self.b), w));
        }

        let denom = 1.0 / (va + vb + vc);
        let v = vb * denom;
        let w = vc * denom;
        add(self.a, add(scale(ab, v), scale(ac, w)))
    }

    /// Point at barycentric coordinates `(1 - u - v, u, v)`.
    pub fn point_at(&self, u: f64, v: f64) -> Point {
        add(
            self.a,
            add(scale(sub(self.b, self.a), u), scale(sub(self.c, self.a), v)),
        )
    }
}
