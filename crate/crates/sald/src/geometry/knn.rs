//! kd-tree over points for exact nearest-neighbor and k-NN queries.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{dist_sq, Point};

enum Node {
    Split {
        axis: u8,
        value: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        start: u32,
        end: u32,
    },
}

/// Static kd-tree over `[f64; 3]` points (2D data is stored with `z = 0`).
pub struct KdTree3 {
    pts: Vec<Point>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

const LEAF_SIZE: usize = 8;

#[derive(PartialEq)]
struct HeapEntry {
    dist_sq: f64,
    index: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .partial_cmp(&other.dist_sq)
            .unwrap()
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdTree3 {
    pub fn build(pts: Vec<Point>) -> Self {
        assert!(!pts.is_empty(), "kd-tree over empty point set");
        let mut order: Vec<u32> = (0..pts.len() as u32).collect();
        let mut nodes = Vec::new();
        build_node(&pts, &mut order, 0, pts.len(), &mut nodes);
        Self { pts, order, nodes }
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    /// Index and squared distance of the nearest point; exact ties resolve
    /// to the lowest index.
    pub fn nearest(&self, q: Point) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_rec(0, q, &mut best);
        best
    }

    fn nearest_rec(&self, node: u32, q: Point, best: &mut (usize, f64)) {
        match &self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start as usize..*end as usize] {
                    let d = dist_sq(self.pts[i as usize], q);
                    if d < best.1 || (d == best.1 && (i as usize) < best.0) {
                        *best = (i as usize, d);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = q[*axis as usize] - value;
                let (near, far) = if delta <= 0.0 {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.nearest_rec(near, q, best);
                if delta * delta <= best.1 {
                    self.nearest_rec(far, q, best);
                }
            }
        }
    }

    /// Distances (not squared) to the `k` nearest points, ascending.
    ///
    /// When `exclude` is `Some(i)` the point with index `i` is skipped,
    /// which lets a point query its own tree.
    pub fn knn_distances(&self, q: Point, k: usize, exclude: Option<usize>) -> Vec<f64> {
        assert!(k > 0);
        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, q, k, exclude, &mut heap);
        let mut out: Vec<f64> = heap.into_iter().map(|e| e.dist_sq.sqrt()).collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    fn knn_rec(
        &self,
        node: u32,
        q: Point,
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<HeapEntry>,
    ) {
        match &self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start as usize..*end as usize] {
                    if exclude == Some(i as usize) {
                        continue;
                    }
                    let d = dist_sq(self.pts[i as usize], q);
                    if heap.len() < k {
                        heap.push(HeapEntry {
                            dist_sq: d,
                            index: i,
                        });
                    } else if d < heap.peek().unwrap().dist_sq {
                        heap.pop();
                        heap.push(HeapEntry {
                            dist_sq: d,
                            index: i,
                        });
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = q[*axis as usize] - value;
                let (near, far) = if delta <= 0.0 {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.knn_rec(near, q, k, exclude, heap);
                let worst = if heap.len() < k {
                    f64::INFINITY
                } else {
                    heap.peek().unwrap().dist_sq
                };
                if delta * delta <= worst {
                    self.knn_rec(far, q, k, exclude, heap);
                }
            }
        }
    }
}

fn build_node(pts: &[Point], order: &mut [u32], start: usize, end: usize, nodes: &mut Vec<Node>) -> u32 {
    let me = nodes.len() as u32;
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: start as u32,
            end: end as u32,
        });
        return me;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in &order[start..end] {
        for k in 0..3 {
            lo[k] = lo[k].min(pts[i as usize][k]);
            hi[k] = hi[k].max(pts[i as usize][k]);
        }
    }
    let mut axis = 0usize;
    let mut spread = f64::NEG_INFINITY;
    for k in 0..3 {
        if hi[k] - lo[k] > spread {
            spread = hi[k] - lo[k];
            axis = k;
        }
    }
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        pts[a as usize][axis]
            .partial_cmp(&pts[b as usize][axis])
            .unwrap()
            .then(a.cmp(&b))
    });
    let value = pts[order[mid] as usize][axis];
    nodes.push(Node::Split {
        axis: axis as u8,
        value,
        left: 0,
        right: 0,
    });
    let left = build_node(pts, order, start, mid, nodes);
    let right = build_node(pts, order, mid, end, nodes);
    if let Node::Split {
        left: l, right: r, ..
    } = &mut nodes[me as usize]
    {
        *l = left;
        *r = right;
    }
    me
}

/// Distance from each point to its k-th closest *other* point in `pts`.
pub fn kth_neighbor_distances(pts: &[Point], k: usize) -> Vec<f64> {
    assert!(k >= 1 && k < pts.len(), "need k in 1..len");
    let tree = KdTree3::build(pts.to_vec());
    pts.iter()
        .enumerate()
        .map(|(i, p)| tree.knn_distances(*p, k, Some(i))[k - 1])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                [
                    rng.random::<f64>() * 2.0 - 1.0,
                    rng.random::<f64>() * 2.0 - 1.0,
                    rng.random::<f64>() * 2.0 - 1.0,
                ]
            })
            .collect()
    }

    #[test]
    fn nearest_matches_brute_force() {
        let pts = random_cloud(400, 3);
        let tree = KdTree3::build(pts.clone());
        let queries = random_cloud(100, 4);
        for q in queries {
            let got = tree.nearest(q);
            let mut want = (usize::MAX, f64::INFINITY);
            for (i, p) in pts.iter().enumerate() {
                let d = dist_sq(*p, q);
                if d < want.1 {
                    want = (i, d);
                }
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn knn_matches_sorted_brute_force() {
        let pts = random_cloud(150, 5);
        let tree = KdTree3::build(pts.clone());
        for (qi, q) in pts.iter().enumerate().take(20) {
            let got = tree.knn_distances(*q, 7, Some(qi));
            let mut all: Vec<f64> = pts
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != qi)
                .map(|(_, p)| crate::linalg::dist(*p, *q))
                .collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (g, w) in got.iter().zip(&all[..7]) {
                assert!((g - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kth_distance_on_uniform_line() {
        // Evenly spaced points: the k-th closest other point sits
        // ceil(k/2) steps away for interior points.
        let delta = 0.01;
        let pts: Vec<Point> = (0..201).map(|i| [i as f64 * delta, 0.0, 0.0]).collect();
        let d = kth_neighbor_distances(&pts, 50);
        let mid = d[100];
        assert!((mid - 25.0 * delta).abs() < 1e-12, "got {mid}");
    }
}
