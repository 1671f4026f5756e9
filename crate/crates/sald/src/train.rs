//! Adam optimization of the sign-agnostic losses.
//!
//! Each epoch draws a fresh minibatch from the precomputed samples,
//! accumulates exact gradients, and applies one Adam update. Gradient
//! accumulation is chunked with boundaries fixed by sample index, and the
//! per-chunk results are reduced in chunk order, so the outcome is
//! bitwise identical whether or not the `parallel` feature fans the
//! chunks out over threads — and across reruns with the same seed.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::{GradSample, SampleBatch, ValueSample};
use crate::net::autodiff::{accumulate_batch, NetGradients, Workspace};
use crate::net::ImplicitNet;

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    /// Loss became non-finite; the term breakdown localizes the blowup.
    NanLoss {
        epoch: usize,
        value_term: f64,
        grad_term: f64,
        reg_term: f64,
    },
    ShapeMismatch,
    EmptyBatch,
    LatentDimensionMismatch { net: usize, table: usize },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NanLoss {
                epoch,
                value_term,
                grad_term,
                reg_term,
            } => write!(
                f,
                "non-finite loss at epoch {epoch} (value {value_term}, grad {grad_term}, reg {reg_term})"
            ),
            Self::ShapeMismatch => write!(f, "parameter and gradient shapes differ"),
            Self::EmptyBatch => write!(f, "cannot train on an empty sample batch"),
            Self::LatentDimensionMismatch { net, table } => write!(
                f,
                "net expects latent dimension {net}, table rows have {table}"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TrainError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Sal,
    Sald,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrDecay {
    pub factor: f64,
    pub every_n_epochs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub lr_decay: Option<LrDecay>,
    pub batch_points: usize,
    pub lambda: f64,
    pub loss_kind: LossKind,
    /// 0 trains a single unconditioned shape.
    pub latent_dim: usize,
    pub seed: u64,
}

impl TrainConfig {
    /// Desk-scale 2D schedule: 5000 epochs at a fixed learning rate.
    pub fn desk_2d(loss_kind: LossKind, seed: u64) -> Self {
        Self {
            epochs: 5000,
            lr: 5e-4,
            lr_decay: None,
            batch_points: 512,
            lambda: match loss_kind {
                LossKind::Sal => 0.0,
                LossKind::Sald => 0.1,
            },
            loss_kind,
            latent_dim: 0,
            seed,
        }
    }
}

/// Per-epoch loss breakdown, in the order written to history CSVs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub total: f64,
    pub value_term: f64,
    pub grad_term: f64,
    pub reg_term: f64,
    pub lr: f64,
}

/// First/second moment accumulators for one set of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn for_tensor_lens(lens: impl Iterator<Item = usize>) -> Self {
        let m: Vec<Vec<f64>> = lens.map(|n| vec![0.0; n]).collect();
        Self {
            v: m.clone(),
            m,
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn for_net(net: &ImplicitNet) -> Self {
        Self::for_tensor_lens(net.param_tensors().map(<[f64]>::len))
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update over matching parameter and gradient tensors.
pub fn adam_step<'p, 'g>(
    params: impl Iterator<Item = &'p mut [f64]>,
    grads: impl Iterator<Item = &'g [f64]>,
    state: &mut AdamState,
    lr: f64,
) -> Result<(), TrainError> {
    state.step += 1;
    let bc1 = 1.0 - state.beta1.powi(state.step as i32);
    let bc2 = 1.0 - state.beta2.powi(state.step as i32);
    let mut tensor = 0;
    for (p, g) in params.zip(grads) {
        if tensor >= state.m.len() || p.len() != g.len() || p.len() != state.m[tensor].len() {
            return Err(TrainError::ShapeMismatch);
        }
        let (m, v) = (&mut state.m[tensor], &mut state.v[tensor]);
        for i in 0..p.len() {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            p[i] -= lr * mhat / (vhat.sqrt() + state.epsilon);
        }
        tensor += 1;
    }
    if tensor != state.m.len() {
        return Err(TrainError::ShapeMismatch);
    }
    Ok(())
}

/// Per-shape latent codes for auto-decoder training.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTable {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl LatentTable {
    /// Rows drawn from `N(0, init_std^2)`.
    pub fn new(n_shapes: usize, dim: usize, init_std: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n_shapes)
            .map(|_| {
                (0..dim)
                    .map(|_| init_std * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        Self { dim, rows }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Option<Self> {
        let dim = rows.first()?.len();
        rows.iter().all(|r| r.len() == dim).then_some(Self { dim, rows })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Linear latent interpolation `(1 - t) z1 + t z2`.
pub fn interpolate_latent(z1: &[f64], z2: &[f64], t: f64) -> Vec<f64> {
    debug_assert_eq!(z1.len(), z2.len());
    z1.iter().zip(z2).map(|(a, b)| (1.0 - t) * a + t * b).collect()
}

/// Values drawn per batch chunk; grads cost roughly three times as much
/// per sample, so their chunks are smaller to balance the tasks.
const VALUE_CHUNK: usize = 256;
const GRAD_CHUNK: usize = 96;

struct DrawnBatch {
    values: Vec<ValueSample>,
    grads: Vec<GradSample>,
}

impl DrawnBatch {
    fn new() -> Self {
        Self {
            values: Vec::new(),
            grads: Vec::new(),
        }
    }

    fn draw(&mut self, batch: &SampleBatch, n: usize, with_grads: bool, rng: &mut ChaCha8Rng) {
        self.values.clear();
        self.grads.clear();
        let nv = batch.values.len();
        let ng = if with_grads { batch.grads.len() } else { 0 };
        for _ in 0..n {
            let i = rng.random_range(0..nv + ng);
            if i < nv {
                self.values.push(batch.values[i]);
            } else {
                self.grads.push(batch.grads[i - nv]);
            }
        }
        if self.values.is_empty() {
            // Degenerate draw; keep the value term defined.
            self.values.push(batch.values[rng.random_range(0..nv)]);
        }
    }
}

/// Accumulates the minibatch gradient into `out` (scaled by `scale`) and
/// returns `(value_term, grad_term)` means. Chunk boundaries depend only
/// on sample indices, and chunk results are folded in order.
fn batch_gradient(
    net: &ImplicitNet,
    z: Option<&[f64]>,
    drawn: &DrawnBatch,
    lambda: f64,
    scale: f64,
    out: &mut NetGradients,
) -> (f64, f64) {
    let nv = drawn.values.len().max(1) as f64;
    let ng = drawn.grads.len().max(1) as f64;
    let vw = scale / nv;
    let gw = scale * lambda / ng;

    enum Task<'a> {
        Values(&'a [ValueSample]),
        Grads(&'a [GradSample]),
    }
    let mut tasks: Vec<Task> = Vec::new();
    for c in drawn.values.chunks(VALUE_CHUNK) {
        tasks.push(Task::Values(c));
    }
    for c in drawn.grads.chunks(GRAD_CHUNK) {
        tasks.push(Task::Grads(c));
    }

    let run = |task: &Task| -> (f64, f64, NetGradients) {
        let mut ws = Workspace::for_net(net);
        let mut acc = NetGradients::zeros_for(net, z.is_some());
        let (vs, gs) = match task {
            Task::Values(c) => accumulate_batch(net, z, c, &[], vw, gw, &mut ws, &mut acc),
            Task::Grads(c) => accumulate_batch(net, z, &[], c, vw, gw, &mut ws, &mut acc),
        };
        (vs, gs, acc)
    };

    #[cfg(feature = "parallel")]
    let results: Vec<(f64, f64, NetGradients)> = {
        use rayon::prelude::*;
        tasks.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(f64, f64, NetGradients)> = tasks.iter().map(run).collect();

    let mut vsum = 0.0;
    let mut gsum = 0.0;
    for (vs, gs, acc) in &results {
        vsum += vs;
        gsum += gs;
        out.add_assign(acc);
    }
    (vsum / nv, gsum / ng)
}

fn lr_at(cfg: &TrainConfig, epoch: usize) -> f64 {
    match cfg.lr_decay {
        Some(LrDecay {
            factor,
            every_n_epochs,
        }) if every_n_epochs > 0 => cfg.lr * factor.powi((epoch / every_n_epochs) as i32),
        _ => cfg.lr,
    }
}

/// Optimizes one shape. Expects a geometrically initialized net;
/// returns the per-epoch loss history.
pub fn train_single(
    batch: &SampleBatch,
    net: &mut ImplicitNet,
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>, TrainError> {
    if batch.values.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let lambda = match cfg.loss_kind {
        LossKind::Sal => 0.0,
        LossKind::Sald => cfg.lambda,
    };
    let with_grads = lambda > 0.0 && !batch.grads.is_empty();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::for_net(net);
    let mut grads = NetGradients::zeros_for(net, false);
    let mut drawn = DrawnBatch::new();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        drawn.draw(batch, cfg.batch_points, with_grads, &mut rng);
        grads.fill_zero();
        let (value_term, grad_term) = batch_gradient(net, None, &drawn, lambda, 1.0, &mut grads);
        let total = value_term + lambda * grad_term;
        if !total.is_finite() {
            return Err(TrainError::NanLoss {
                epoch,
                value_term,
                grad_term,
                reg_term: 0.0,
            });
        }
        let lr = lr_at(cfg, epoch);
        adam_step(net.param_tensors_mut(), grads.tensors(), &mut adam, lr)?;
        history.push(EpochStats {
            epoch,
            total,
            value_term,
            grad_term,
            reg_term: 0.0,
            lr,
        });
    }
    Ok(history)
}

/// Jointly optimizes decoder parameters and per-shape latent codes.
///
/// Every epoch visits a minibatch of at most 64 shapes; each contributes
/// `batch_points` drawn samples and its latent regularizer
/// `0.001 |z|^2`. Latent rows use per-row Adam states so shapes outside
/// a minibatch are untouched.
pub fn train_autodecoder(
    shapes: &[SampleBatch],
    net: &mut ImplicitNet,
    latents: &mut LatentTable,
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>, TrainError> {
    if shapes.is_empty() || shapes.iter().any(|s| s.values.is_empty()) {
        return Err(TrainError::EmptyBatch);
    }
    if net.latent_dim() == 0 || net.latent_dim() != latents.dim() || latents.len() != shapes.len()
    {
        return Err(TrainError::LatentDimensionMismatch {
            net: net.latent_dim(),
            table: latents.dim(),
        });
    }
    let lambda = match cfg.loss_kind {
        LossKind::Sal => 0.0,
        LossKind::Sald => cfg.lambda,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam_net = AdamState::for_net(net);
    let mut adam_z: Vec<AdamState> = (0..latents.len())
        .map(|_| AdamState::for_tensor_lens(core::iter::once(latents.dim())))
        .collect();
    let mut grads = NetGradients::zeros_for(net, false);
    let mut zgrad = vec![0.0; latents.dim()];
    let mut drawn = DrawnBatch::new();
    let mut history = Vec::with_capacity(cfg.epochs);
    let minibatch = shapes.len().min(64);
    let mut shape_order: Vec<usize> = (0..shapes.len()).collect();

    for epoch in 0..cfg.epochs {
        // Partial shuffle picks the epoch's shape minibatch.
        for i in 0..minibatch {
            let j = i + rng.random_range(0..shape_order.len() - i);
            shape_order.swap(i, j);
        }
        let picked = &shape_order[..minibatch];
        let scale = 1.0 / minibatch as f64;

        grads.fill_zero();
        let mut value_term = 0.0;
        let mut grad_term = 0.0;
        let mut reg_term = 0.0;
        let lr = lr_at(cfg, epoch);
        let mut z_updates: Vec<(usize, Vec<f64>)> = Vec::with_capacity(minibatch);
        for &s in picked {
            let with_grads = lambda > 0.0 && !shapes[s].grads.is_empty();
            drawn.draw(&shapes[s], cfg.batch_points, with_grads, &mut rng);
            let z = latents.row(s);
            // Shared decoder gradient plus this shape's latent gradient.
            let mut shape_grads = NetGradients::zeros_for(net, true);
            let (vt, gt) =
                batch_gradient(net, Some(z), &drawn, lambda, scale, &mut shape_grads);
            value_term += scale * vt;
            grad_term += scale * gt;
            reg_term += scale * crate::loss::latent_reg_ad(z);
            grads.add_assign(&shape_grads);
            zgrad.clear();
            zgrad.extend(shape_grads.latent.as_ref().unwrap().iter().copied());
            for (g, zi) in zgrad.iter_mut().zip(z) {
                *g += scale * 0.002 * zi;
            }
            z_updates.push((s, zgrad.clone()));
        }
        let total = value_term + lambda * grad_term + reg_term;
        if !total.is_finite() {
            return Err(TrainError::NanLoss {
                epoch,
                value_term,
                grad_term,
                reg_term,
            });
        }
        adam_step(net.param_tensors_mut(), grads.tensors(), &mut adam_net, lr)?;
        for (s, zg) in &z_updates {
            adam_step(
                core::iter::once(latents.rows[*s].as_mut_slice()),
                core::iter::once(zg.as_slice()),
                &mut adam_z[*s],
                lr,
            )?;
        }
        history.push(EpochStats {
            epoch,
            total,
            value_term,
            grad_term,
            reg_term,
            lr,
        });
    }
    Ok(history)
}
