//! Sign-agnostic similarity measures and the training losses built on them.
//!
//! A sign-agnostic measure `tau(a, b)` compares `a` against `b` up to the
//! sign of `a`. Regressing the network against the *unsigned* distance
//! field with such a measure admits signed minima, which is what turns an
//! unsigned target into a signed implicit function.

pub mod curve;

use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::SampleBatch;
use crate::linalg::dot;
use crate::net::{ImplicitNet, NetError, Workspace};

pub use curve::{
    curve_restricted_sal, curve_restricted_sald_excess, CurveFamily, CurveError, GradTau,
    HalfSpanIntegral,
};

#[derive(Debug, Clone, PartialEq)]
pub enum LossError {
    EmptyBatch,
    NonUnitInput { norm: f64 },
    DimensionMismatch,
    Net(NetError),
}

impl fmt::Display for LossError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyBatch => write!(f, "empty sample batch"),
            Self::NonUnitInput { norm } => write!(f, "expected a unit vector, norm is {norm}"),
            Self::DimensionMismatch => write!(f, "vector dimensions differ"),
            Self::Net(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LossError {}

impl From<NetError> for LossError {
    fn from(e: NetError) -> Self {
        Self::Net(e)
    }
}

/// A loss evaluation split into its terms.
///
/// `total = value_term + lambda * grad_term + reg_term`, bitwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub total: f64,
    pub value_term: f64,
    pub grad_term: f64,
    pub reg_term: f64,
}

impl LossValue {
    pub fn new(value_term: f64, grad_term: f64, reg_term: f64, lambda: f64) -> Self {
        Self {
            total: value_term + lambda * grad_term + reg_term,
            value_term,
            grad_term,
            reg_term,
        }
    }
}

/// Scalar sign-agnostic difference `| |a| - b |` for `b >= 0`.
///
/// Equals `min(|a - b|, |a + b|)`.
pub fn tau_scalar(a: f64, b: f64) -> f64 {
    debug_assert!(b >= 0.0);
    (a.abs() - b).abs()
}

/// Vector sign-agnostic difference `min(|a - b|, |a + b|)`.
pub fn tau_vector(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut minus = 0.0;
    let mut plus = 0.0;
    for (x, y) in a.iter().zip(b) {
        minus += (x - y) * (x - y);
        plus += (x + y) * (x + y);
    }
    minus.min(plus).sqrt()
}

/// `|sin|` of the angle between unit vectors, another sign-agnostic
/// measure. Errors when either input is not unit norm (within 1e-9).
///
/// 2D uses the cross product; higher dimensions use the rejection
/// `|a - (a.b) b|`, which is stable near parallel vectors.
pub fn tau_sin(a: &[f64], b: &[f64]) -> Result<f64, LossError> {
    if a.len() != b.len() {
        return Err(LossError::DimensionMismatch);
    }
    for v in [a, b] {
        let n = crate::linalg::norm(v);
        if (n - 1.0).abs() > 1e-9 {
            return Err(LossError::NonUnitInput { norm: n });
        }
    }
    if a.len() == 2 {
        return Ok((a[0] * b[1] - a[1] * b[0]).abs());
    }
    let c = dot(a, b);
    let mut rej = 0.0;
    for (x, y) in a.iter().zip(b) {
        let r = x - c * y;
        rej += r * r;
    }
    Ok(rej.sqrt())
}

/// Closed form of `min(|a - b|, |a + b|)` for unit vectors:
/// `sqrt(2) * (1 - |<a, b>|)^(1/2)`.
pub fn lemma1_closed_form(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let c = dot(a, b).abs();
    (2.0 * (1.0 - c).max(0.0)).sqrt()
}

/// Auto-decoder latent regularizer `0.001 * |z|^2`.
pub fn latent_reg_ad(z: &[f64]) -> f64 {
    0.001 * dot(z, z)
}

/// Mean sign-agnostic value loss over the batch (no derivative term).
pub fn sal_loss(
    net: &ImplicitNet,
    z: Option<&[f64]>,
    batch: &SampleBatch,
) -> Result<LossValue, LossError> {
    sal_loss_with(net, z, batch, tau_scalar)
}

/// [`sal_loss`] with a custom scalar measure.
pub fn sal_loss_with(
    net: &ImplicitNet,
    z: Option<&[f64]>,
    batch: &SampleBatch,
    dist_fn: fn(f64, f64) -> f64,
) -> Result<LossValue, LossError> {
    if batch.values.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    let mut ws = Workspace::for_net(net);
    let d = batch.dim;
    let mut sum = 0.0;
    for s in &batch.values {
        let f = ws.eval(net, &s.point[..d], z);
        sum += dist_fn(f, s.h);
    }
    Ok(LossValue::new(sum / batch.values.len() as f64, 0.0, 0.0, 0.0))
}

/// The full sign-agnostic loss: mean value term plus `lambda` times the
/// mean sign-agnostic gradient term over the on-surface samples.
///
/// Batches without gradient samples (e.g. from point clouds) contribute
/// a zero gradient term.
pub fn sald_loss(
    net: &ImplicitNet,
    z: Option<&[f64]>,
    batch: &SampleBatch,
    lambda: f64,
) -> Result<LossValue, LossError> {
    if batch.values.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    debug_assert!(lambda >= 0.0);
    let mut ws = Workspace::for_net(net);
    let d = batch.dim;
    let mut vsum = 0.0;
    for s in &batch.values {
        let f = ws.eval(net, &s.point[..d], z);
        vsum += tau_scalar(f, s.h);
    }
    let mut gsum = 0.0;
    for s in &batch.grads {
        let (_, g) = ws.eval_with_grad(net, &s.point[..d], z);
        gsum += tau_vector(&g[..d], &s.normal[..d]);
    }
    let value_term = vsum / batch.values.len() as f64;
    let grad_term = gsum / batch.grads.len().max(1) as f64;
    Ok(LossValue::new(value_term, grad_term, 0.0, lambda))
}

/// Uniform unit vector in `dim` dimensions.
pub(crate) fn random_unit<R: rand::Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    use rand_distr::StandardNormal;
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = crate::linalg::norm(&v);
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}
