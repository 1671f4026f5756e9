//! Bounding-volume hierarchy for exact nearest-primitive queries.
//!
//! Leaves hold original primitive indices; queries prune subtrees whose
//! box distance strictly exceeds the current best, so equal-distance
//! candidates survive and the lowest-index tie-break stays exact.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::Point;

#[derive(Debug, Clone, Copy)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: [f64::INFINITY; 3],
            max: [f64::NEG_INFINITY; 3],
        }
    }

    pub fn of_points(pts: &[Point]) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.grow(*p);
        }
        b
    }

    pub fn grow(&mut self, p: Point) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    pub fn merge(&mut self, other: &Aabb) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(other.min[k]);
            self.max[k] = self.max[k].max(other.max[k]);
        }
    }

    pub fn center(&self) -> Point {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        ]
    }

    /// Squared distance from `q` to the box (zero inside).
    pub fn dist_sq(&self, q: Point) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if q[k] < self.min[k] {
                self.min[k] - q[k]
            } else if q[k] > self.max[k] {
                q[k] - self.max[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }
}

#[derive(Debug)]
enum Node {
    Internal { bbox: Aabb, left: u32, right: u32 },
    Leaf { bbox: Aabb, start: u32, end: u32 },
}

#[derive(Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Primitive indices, permuted so each leaf owns a contiguous run.
    order: Vec<u32>,
}

const LEAF_SIZE: usize = 4;

impl Bvh {
    /// Builds over per-primitive bounding boxes by median split along the
    /// largest centroid axis.
    pub fn build(boxes: &[Aabb]) -> Self {
        assert!(!boxes.is_empty(), "bvh over empty primitive set");
        let mut order: Vec<u32> = (0..boxes.len() as u32).collect();
        let mut nodes = Vec::new();
        build_node(boxes, &mut order, 0, boxes.len(), &mut nodes);
        Self { nodes, order }
    }

    /// Finds the primitive minimizing `dist_sq(prim, q)`, breaking exact
    /// ties by the lowest primitive index.
    ///
    /// `prim_dist_sq(index)` must return the exact squared distance.
    pub fn nearest<F: FnMut(usize) -> f64>(&self, q: Point, mut prim_dist_sq: F) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(idx) = stack.pop() {
            match &self.nodes[idx as usize] {
                Node::Leaf { bbox, start, end } => {
                    if bbox.dist_sq(q) > best.1 {
                        continue;
                    }
                    for &prim in &self.order[*start as usize..*end as usize] {
                        let d = prim_dist_sq(prim as usize);
                        if d < best.1 || (d == best.1 && (prim as usize) < best.0) {
                            best = (prim as usize, d);
                        }
                    }
                }
                Node::Internal { bbox, left, right } => {
                    if bbox.dist_sq(q) > best.1 {
                        continue;
                    }
                    // Visit the nearer child first for tighter pruning.
                    let (dl, dr) = (
                        self.node_bbox(*left).dist_sq(q),
                        self.node_bbox(*right).dist_sq(q),
                    );
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        (best.0, best.1)
    }

    fn node_bbox(&self, idx: u32) -> &Aabb {
        match &self.nodes[idx as usize] {
            Node::Internal { bbox, .. } => bbox,
            Node::Leaf { bbox, .. } => bbox,
        }
    }
}

fn build_node(boxes: &[Aabb], order: &mut [u32], start: usize, end: usize, nodes: &mut Vec<Node>) -> u32 {
    let mut bbox = Aabb::empty();
    let mut centroid_bounds = Aabb::empty();
    for &i in &order[start..end] {
        bbox.merge(&boxes[i as usize]);
        centroid_bounds.grow(boxes[i as usize].center());
    }
    let me = nodes.len() as u32;
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            bbox,
            start: start as u32,
            end: end as u32,
        });
        return me;
    }
    let mut axis = 0;
    let mut spread = f64::NEG_INFINITY;
    for k in 0..3 {
        let s = centroid_bounds.max[k] - centroid_bounds.min[k];
        if s > spread {
            spread = s;
            axis = k;
        }
    }
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        let ca = boxes[a as usize].center()[axis];
        let cb = boxes[b as usize].center()[axis];
        ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
    });
    nodes.push(Node::Internal {
        bbox,
        left: 0,
        right: 0,
    });
    let left = build_node(boxes, order, start, mid, nodes);
    let right = build_node(boxes, order, mid, end, nodes);
    if let Node::Internal {
        left: l, right: r, ..
    } = &mut nodes[me as usize]
    {
        *l = left;
        *r = right;
    }
    me
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist_sq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nearest_matches_brute_force_with_tie_break() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point> = (0..300)
            .map(|_| {
                [
                    (rng.random::<f64>() * 4.0).round() / 4.0,
                    (rng.random::<f64>() * 4.0).round() / 4.0,
                    0.0,
                ]
            })
            .collect();
        let boxes: Vec<Aabb> = pts.iter().map(|p| Aabb { min: *p, max: *p }).collect();
        let bvh = Bvh::build(&boxes);
        for _ in 0..200 {
            let q = [
                (rng.random::<f64>() * 4.0).round() / 4.0,
                (rng.random::<f64>() * 4.0).round() / 4.0,
                0.0,
            ];
            let (bi, bd) = bvh.nearest(q, |i| dist_sq(pts[i], q));
            let mut want = (usize::MAX, f64::INFINITY);
            for (i, p) in pts.iter().enumerate() {
                let d = dist_sq(*p, q);
                if d < want.1 {
                    want = (i, d);
                }
            }
            // Quantized coordinates force frequent exact ties.
            assert_eq!((bi, bd), want);
        }
    }
}
