//! Training-sample generation from raw geometry.
//!
//! Value samples come from two isotropic Gaussians per surface point —
//! one with a local bandwidth set by the k-th-nearest sampled neighbor,
//! one with a fixed global bandwidth — plus the projections of those
//! perturbed points back onto the geometry (so the zero level is pinned).
//! Gradient samples are uniform on the geometry and carry one arbitrary
//! representative of the two possible unit normals; the sign-agnostic
//! losses make the choice immaterial.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::knn::kth_neighbor_distances;
use super::{GeometryError, GradSample, RawGeometry, SampleBatch, ValueSample};
use crate::linalg::Point;

/// Parameters for [`sample_training_set`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleParams {
    /// Number of surface points used as Gaussian centers.
    pub n_surface: usize,
    /// The local bandwidth of a center is its distance to the k-th
    /// closest other center.
    pub k: usize,
    /// Fixed global Gaussian bandwidth, in world units.
    pub sigma2: f64,
    /// Total number of emitted samples (values + grads).
    pub total: usize,
    /// Fraction of `total` devoted to gradient samples. The remaining
    /// samples split evenly between perturbed points and their
    /// projections.
    pub grad_fraction: f64,
    pub seed: u64,
}

impl SampleParams {
    /// Defaults: `k = 50`, `sigma2 = 0.3`, a third of the samples carry
    /// gradients, and one Gaussian center per six emitted samples.
    pub fn new(total: usize, seed: u64) -> Self {
        let k = 50;
        Self {
            n_surface: (total / 6).max(k + 1),
            k,
            sigma2: 0.3,
            total,
            grad_fraction: 1.0 / 3.0,
            seed,
        }
    }
}

/// Draws a precomputed [`SampleBatch`] from `geom`.
///
/// Deterministic for a fixed seed. Point clouds carry no orientable
/// primitives, so they produce value samples only.
pub fn sample_training_set(
    geom: &RawGeometry,
    params: &SampleParams,
) -> Result<SampleBatch, GeometryError> {
    if params.n_surface <= params.k {
        return Err(GeometryError::NotEnoughSurfaceSamples {
            needed: params.k + 1,
            got: params.n_surface,
        });
    }
    assert!(params.k >= 1, "k must be positive");
    assert!(params.total >= 1, "total must be positive");
    assert!(
        (0.0..1.0).contains(&params.grad_fraction),
        "grad_fraction must be in [0, 1)"
    );

    let dim = geom.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let centers: Vec<Point> = (0..params.n_surface)
        .map(|_| geom.sample_uniform(&mut rng).0)
        .collect();
    let sigma1 = kth_neighbor_distances(&centers, params.k);

    let with_normals = geom.primitive_normal(0).is_ok();
    let n_grads = if with_normals {
        let target = (params.total as f64 * params.grad_fraction + 0.5) as usize;
        let n_pairs = (params.total - target) / 2;
        params.total - 2 * n_pairs
    } else {
        0
    };
    let n_value = params.total - n_grads;

    let mut values = Vec::with_capacity(n_value);
    let mut draw = 0usize;
    while values.len() < n_value {
        let idx = rng.random_range(0..params.n_surface);
        let sigma = if draw % 2 == 0 {
            sigma1[idx]
        } else {
            params.sigma2
        };
        draw += 1;
        let mut p = centers[idx];
        for c in p.iter_mut().take(dim) {
            let xi: f64 = rng.sample(StandardNormal);
            *c += sigma * xi;
        }
        let near = geom.nearest_point(p);
        values.push(ValueSample {
            point: p,
            h: near.distance,
        });
        if values.len() < n_value {
            // Projection lands on the geometry; recompute h there so the
            // stored value is exactly the queryable distance (~0).
            let h = geom.nearest_point(near.point).distance;
            values.push(ValueSample {
                point: near.point,
                h,
            });
        }
    }

    let mut grads = Vec::with_capacity(n_grads);
    for _ in 0..n_grads {
        let (p, prim) = geom.sample_uniform(&mut rng);
        grads.push(GradSample {
            point: p,
            normal: geom.primitive_normal(prim)?,
        });
    }

    Ok(SampleBatch { dim, values, grads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Segment2;
    use crate::linalg::norm3;

    fn unit_circle(n: usize) -> RawGeometry {
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
    fn value_samples_store_exact_distances() {
        let geom = unit_circle(64);
        let batch = sample_training_set(&geom, &SampleParams::new(1000, 7)).unwrap();
        assert_eq!(batch.len(), 1000);
        for v in &batch.values {
            let h = geom.unsigned_distance(&v.point[..2]).unwrap();
            assert_eq!(v.h, h, "stored h must equal the queried distance");
        }
    }

    #[test]
    fn projected_samples_sit_on_the_geometry() {
        let geom = unit_circle(64);
        let batch = sample_training_set(&geom, &SampleParams::new(600, 3)).unwrap();
        // Even draws perturb, odd draws are projections with h ~ 0.
        let mut projected = 0;
        for v in &batch.values {
            if v.h <= 1e-12 {
                projected += 1;
            }
        }
        assert!(projected >= batch.values.len() / 2 - 1);
    }

    #[test]
    fn grad_samples_are_unit_and_on_surface() {
        let geom = unit_circle(64);
        let batch = sample_training_set(&geom, &SampleParams::new(900, 11)).unwrap();
        assert!(!batch.grads.is_empty());
        for gsample in &batch.grads {
            assert!((norm3(gsample.normal) - 1.0).abs() < 1e-9);
            let h = geom.unsigned_distance(&gsample.point[..2]).unwrap();
            assert!(h < 1e-9);
        }
    }

    #[test]
    fn point_clouds_emit_no_grad_samples() {
        let pts: Vec<crate::linalg::Point> =
            (0..200).map(|i| [i as f64 * 0.01, 0.0, 0.0]).collect();
        let geom = RawGeometry::from_points(pts).unwrap();
        let batch = sample_training_set(&geom, &SampleParams::new(400, 1)).unwrap();
        assert!(batch.grads.is_empty());
        assert_eq!(batch.values.len(), 400);
    }

    #[test]
    fn too_few_centers_is_an_error() {
        let geom = unit_circle(8);
        let mut p = SampleParams::new(100, 0);
        p.n_surface = 10;
        p.k = 50;
        assert!(matches!(
            sample_training_set(&geom, &p),
            Err(GeometryError::NotEnoughSurfaceSamples { .. })
        ));
    }

    #[test]
    fn determinism_per_seed() {
        let geom = unit_circle(32);
        let a = sample_training_set(&geom, &SampleParams::new(500, 42)).unwrap();
        let b = sample_training_set(&geom, &SampleParams::new(500, 42)).unwrap();
        assert_eq!(a, b);
        let c = sample_training_set(&geom, &SampleParams::new(500, 43)).unwrap();
        assert_ne!(a, c);
    }
}
