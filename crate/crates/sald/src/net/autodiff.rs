//! Exact derivatives of the decoder: forward evaluation, forward-mode
//! spatial Jacobians, and the reverse pass over both.
//!
//! The spatial gradient is built layer by layer as
//! `J_{l+1} = diag(sigma'(u_{l+1})) W_{l+1} J_l`. Parameter gradients of
//! a combined objective `w * f(x) + v . grad_x f(x)` are obtained by a
//! reverse sweep over that recursion: the activation Jacobian depends on
//! the pre-activations, so the chain rule picks up a `sigma''` term —
//! the only place a second derivative is needed, in closed form.
//!
//! All buffers live in a [`Workspace`] that is reused across samples; a
//! fresh workspace is cheap but per-sample allocation is not.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{softplus_and_sigmoid, ImplicitNet};
use crate::geometry::{GradSample, SampleBatch, ValueSample};
use crate::linalg::{axpy, dot};
use crate::loss::{LossError, LossValue};

/// Per-parameter gradient tensors mirroring an [`ImplicitNet`] layout,
/// plus the gradient of the latent code when one is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct NetGradients {
    /// Per layer: (weight gradient, bias gradient).
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
    pub latent: Option<Vec<f64>>,
}

impl NetGradients {
    pub fn zeros_for(net: &ImplicitNet, with_latent: bool) -> Self {
        Self {
            layers: net
                .layers()
                .iter()
                .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
                .collect(),
            latent: with_latent.then(|| vec![0.0; net.latent_dim()]),
        }
    }

    pub fn fill_zero(&mut self) {
        for (w, b) in &mut self.layers {
            w.fill(0.0);
            b.fill(0.0);
        }
        if let Some(z) = &mut self.latent {
            z.fill(0.0);
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            for (a, o) in w.iter_mut().zip(ow) {
                *a += o;
            }
            for (a, o) in b.iter_mut().zip(ob) {
                *a += o;
            }
        }
        if let (Some(z), Some(oz)) = (&mut self.latent, &other.latent) {
            for (a, o) in z.iter_mut().zip(oz) {
                *a += o;
            }
        }
    }

    /// Parameter-gradient tensors in the same order as
    /// [`ImplicitNet::param_tensors_mut`] (latent excluded).
    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.layers
            .iter()
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
    }
}

/// Reusable evaluation buffers sized for one net.
///
/// Spatial Jacobians are stored plane-major — one contiguous slice of
/// `rows` entries per spatial dimension — so every hot loop runs at unit
/// stride.
pub struct Workspace {
    input: Vec<f64>,
    /// Pre-activations per layer.
    us: Vec<Vec<f64>>,
    /// Activations per layer (last layer: the raw linear output).
    ys: Vec<Vec<f64>>,
    /// sigmoid(beta * u) per hidden layer.
    sig: Vec<Vec<f64>>,
    /// Post-activation spatial Jacobians, d planes of rows each.
    js: Vec<Vec<f64>>,
    /// Pre-activation spatial Jacobians `A = W J_hat`, same layout.
    a: Vec<Vec<f64>>,
    ybar: Vec<Vec<f64>>,
    jbar: Vec<Vec<f64>>,
    ubar: Vec<f64>,
    abar: Vec<f64>,
    tbar: Vec<f64>,
    input_bar: Vec<f64>,
}

impl Workspace {
    pub fn for_net(net: &ImplicitNet) -> Self {
        let d = net.spatial_dim();
        let mut max_rows = 1;
        let mut us = Vec::new();
        let mut js = Vec::new();
        for l in net.layers() {
            us.push(vec![0.0; l.rows]);
            js.push(vec![0.0; l.rows * d]);
            max_rows = max_rows.max(l.rows);
        }
        Self {
            input: vec![0.0; net.input_dim()],
            ys: us.clone(),
            sig: us.clone(),
            ybar: us.clone(),
            a: js.clone(),
            jbar: js.clone(),
            us,
            js,
            ubar: vec![0.0; max_rows],
            abar: vec![0.0; max_rows * d],
            tbar: vec![0.0; max_rows],
            input_bar: vec![0.0; net.input_dim()],
        }
    }

    /// Forward pass; caller guarantees dimensions match the net.
    pub fn eval(&mut self, net: &ImplicitNet, x: &[f64], z: Option<&[f64]>) -> f64 {
        self.eval_inner(net, x, z, false)
    }

    /// Activations feeding the output layer, valid after an eval.
    pub(crate) fn penultimate(&self) -> &[f64] {
        &self.ys[self.ys.len() - 2]
    }

    /// Forward pass plus the forward-mode spatial gradient.
    pub fn eval_with_grad(
        &mut self,
        net: &ImplicitNet,
        x: &[f64],
        z: Option<&[f64]>,
    ) -> (f64, [f64; 3]) {
        let f = self.eval_inner(net, x, z, true);
        let d = net.spatial_dim();
        let mut g = [0.0; 3];
        g[..d].copy_from_slice(&self.js[net.depth() - 1][..d]);
        (f, g)
    }

    fn eval_inner(&mut self, net: &ImplicitNet, x: &[f64], z: Option<&[f64]>, with_grad: bool) -> f64 {
        let d = net.spatial_dim();
        let in_dim = net.input_dim();
        let depth = net.depth();
        let beta = net.beta();
        self.input[..x.len()].copy_from_slice(x);
        if let Some(z) = z {
            self.input[x.len()..].copy_from_slice(z);
        }
        for l in 0..depth {
            let layer = &net.layers()[l];
            let is_last = l + 1 == depth;
            let is_skip = net.skip_layer() == Some(l);
            let hid = if is_skip { layer.cols - in_dim } else { layer.cols };

            {
                let (head, tail) = self.ys.split_at_mut(l);
                let prev: &[f64] = if l == 0 { &self.input } else { &head[l - 1] };
                let u = &mut self.us[l];
                for i in 0..layer.rows {
                    let row = &layer.w[i * layer.cols..(i + 1) * layer.cols];
                    let s = if is_skip {
                        dot(&row[..hid], prev) + dot(&row[hid..], &self.input)
                    } else {
                        dot(row, prev)
                    };
                    u[i] = s + layer.b[i];
                }
                let y = &mut tail[0];
                if is_last {
                    y[0] = self.us[l][0];
                } else {
                    let sig = &mut self.sig[l];
                    for i in 0..layer.rows {
                        let (sp, s) = softplus_and_sigmoid(self.us[l][i], beta);
                        y[i] = sp;
                        sig[i] = s;
                    }
                }
            }

            if with_grad {
                let (jhead, jtail) = self.js.split_at_mut(l);
                let rows = layer.rows;
                let a = &mut self.a[l];
                for j in 0..d {
                    let aplane = &mut a[j * rows..(j + 1) * rows];
                    if l == 0 {
                        // The input Jacobian is the identity over the
                        // spatial rows, so A is just those columns of W.
                        for (i, ai) in aplane.iter_mut().enumerate() {
                            *ai = layer.w[i * layer.cols + j];
                        }
                    } else {
                        let prev_rows = net.layers()[l - 1].rows;
                        let jp = &jhead[l - 1][j * prev_rows..(j + 1) * prev_rows];
                        for (i, ai) in aplane.iter_mut().enumerate() {
                            *ai = dot(&layer.w[i * layer.cols..i * layer.cols + hid], jp);
                        }
                        if is_skip {
                            for (i, ai) in aplane.iter_mut().enumerate() {
                                *ai += layer.w[i * layer.cols + hid + j];
                            }
                        }
                    }
                }
                let jcur = &mut jtail[0];
                if is_last {
                    jcur[..d].copy_from_slice(&a[..d]);
                } else {
                    let sig = &self.sig[l];
                    for j in 0..d {
                        let aplane = &a[j * rows..(j + 1) * rows];
                        let jplane = &mut jcur[j * rows..(j + 1) * rows];
                        for ((jv, av), sv) in jplane.iter_mut().zip(aplane).zip(sig) {
                            *jv = sv * av;
                        }
                    }
                }
            }
        }
        self.ys[depth - 1][0]
    }

    /// Accumulates the gradient of `w_out * f + v . grad_x f` with respect
    /// to all parameters (and the latent code, via the raw-input adjoint)
    /// into `out`. Requires a preceding [`Self::eval`] (or
    /// [`Self::eval_with_grad`] when `v` is present) on the same inputs.
    pub fn vjp(
        &mut self,
        net: &ImplicitNet,
        w_out: f64,
        v: Option<&[f64]>,
        out: &mut NetGradients,
    ) {
        let d = net.spatial_dim();
        let in_dim = net.input_dim();
        let depth = net.depth();
        let beta = net.beta();
        let with_grad = v.is_some();
        for l in 0..depth - 1 {
            self.ybar[l].fill(0.0);
            if with_grad {
                self.jbar[l].fill(0.0);
            }
        }
        self.input_bar.fill(0.0);

        // Last layer: linear with a single output row.
        {
            let l = depth - 1;
            let layer = &net.layers()[l];
            let prev = &self.ys[l - 1];
            let prev_rows = layer.cols;
            let (gw, gb) = &mut out.layers[l];
            gb[0] += w_out;
            let ybar_prev = &mut self.ybar[l - 1];
            axpy(w_out, prev, gw);
            axpy(w_out, &layer.w, ybar_prev);
            if let Some(v) = v {
                for (j, &vj) in v.iter().enumerate() {
                    let jp = &self.js[l - 1][j * prev_rows..(j + 1) * prev_rows];
                    let jbar_p =
                        &mut self.jbar[l - 1][j * prev_rows..(j + 1) * prev_rows];
                    axpy(vj, jp, gw);
                    axpy(vj, &layer.w, jbar_p);
                }
            }
        }

        for l in (0..depth - 1).rev() {
            let layer = &net.layers()[l];
            let rows = layer.rows;
            let cols = layer.cols;
            let is_skip = net.skip_layer() == Some(l);
            let hid = if is_skip { cols - in_dim } else { cols };

            // Adjoints of the pre-activation: the activation value path
            // contributes sigma', the Jacobian path contributes sigma''
            // against the stored pre-activation Jacobian A.
            {
                let sig = &self.sig[l];
                let ybar = &self.ybar[l];
                let ubar = &mut self.ubar[..rows];
                for ((ub, &s), &yb) in ubar.iter_mut().zip(sig).zip(ybar) {
                    *ub = s * yb;
                }
                if with_grad {
                    let jbar = &self.jbar[l];
                    let a = &self.a[l];
                    let tbar = &mut self.tbar[..rows];
                    tbar.fill(0.0);
                    for j in 0..d {
                        let jb = &jbar[j * rows..(j + 1) * rows];
                        let ap = &a[j * rows..(j + 1) * rows];
                        for ((t, &jv), &av) in tbar.iter_mut().zip(jb).zip(ap) {
                            *t += jv * av;
                        }
                        let ab = &mut self.abar[j * rows..(j + 1) * rows];
                        for ((absl, &jv), &s) in ab.iter_mut().zip(jb).zip(sig) {
                            *absl = s * jv;
                        }
                    }
                    for ((ub, &s), &t) in ubar.iter_mut().zip(sig).zip(tbar.iter()) {
                        *ub += beta * s * (1.0 - s) * t;
                    }
                }
            }

            let (yhead, _) = self.ybar.split_at_mut(l);
            let (jhead, _) = self.jbar.split_at_mut(l);
            let (gw, gb) = &mut out.layers[l];
            if l == 0 {
                for i in 0..rows {
                    let ub = self.ubar[i];
                    gb[i] += ub;
                    let wrow = &layer.w[i * cols..(i + 1) * cols];
                    let gwrow = &mut gw[i * cols..(i + 1) * cols];
                    axpy(ub, &self.input, gwrow);
                    axpy(ub, wrow, &mut self.input_bar);
                    if with_grad {
                        // A = W[:, :d] here, so the Jacobian path feeds
                        // straight into the spatial columns.
                        for j in 0..d {
                            gwrow[j] += self.abar[j * rows + i];
                        }
                    }
                }
            } else {
                let prev = &self.ys[l - 1];
                let prev_rows = prev.len();
                let jprev = &self.js[l - 1];
                let ybar_prev = &mut yhead[l - 1];
                let jbar_prev = &mut jhead[l - 1];
                for i in 0..rows {
                    let ub = self.ubar[i];
                    gb[i] += ub;
                    let wrow = &layer.w[i * cols..(i + 1) * cols];
                    let gwrow = &mut gw[i * cols..(i + 1) * cols];
                    axpy(ub, prev, &mut gwrow[..hid]);
                    axpy(ub, &wrow[..hid], ybar_prev);
                    if with_grad {
                        for j in 0..d {
                            let ab = self.abar[j * rows + i];
                            let jp = &jprev[j * prev_rows..(j + 1) * prev_rows];
                            let jbar_p =
                                &mut jbar_prev[j * prev_rows..(j + 1) * prev_rows];
                            axpy(ab, jp, &mut gwrow[..hid]);
                            axpy(ab, &wrow[..hid], jbar_p);
                        }
                    }
                    if is_skip {
                        axpy(ub, &self.input, &mut gwrow[hid..]);
                        axpy(ub, &wrow[hid..], &mut self.input_bar);
                        if with_grad {
                            for j in 0..d {
                                gwrow[hid + j] += self.abar[j * rows + i];
                            }
                        }
                    }
                }
            }
        }

        if let Some(lat) = &mut out.latent {
            for (g, ib) in lat.iter_mut().zip(&self.input_bar[d..]) {
                *g += ib;
            }
        }
    }
}

/// Derivative of `| |a| - b |` in `a`, using the zero subgradient at kinks.
#[inline]
fn d_tau_scalar(f: f64, h: f64) -> f64 {
    sgn0(f) * sgn0(f.abs() - h)
}

#[inline]
fn sgn0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Accumulates loss sums and parameter gradients over sample slices.
///
/// `value_weight` multiplies each value-sample pull (callers pass
/// `1 / n_values` of the *full* batch so chunked accumulation composes)
/// and `grad_weight` each gradient-sample pull (`lambda / n_grads`).
/// Returns the raw `(sum tau_value, sum tau_grad)` over the slices.
pub fn accumulate_batch(
    net: &ImplicitNet,
    z: Option<&[f64]>,
    values: &[ValueSample],
    grads: &[GradSample],
    value_weight: f64,
    grad_weight: f64,
    ws: &mut Workspace,
    out: &mut NetGradients,
) -> (f64, f64) {
    let d = net.spatial_dim();
    let mut value_sum = 0.0;
    for s in values {
        let f = ws.eval(net, &s.point[..d], z);
        let tau = (f.abs() - s.h).abs();
        value_sum += tau;
        let w = value_weight * d_tau_scalar(f, s.h);
        if w != 0.0 {
            ws.vjp(net, w, None, out);
        }
    }
    let mut grad_sum = 0.0;
    for s in grads {
        let (_, g) = ws.eval_with_grad(net, &s.point[..d], z);
        let mut minus = 0.0;
        let mut plus = 0.0;
        for j in 0..d {
            minus += (g[j] - s.normal[j]) * (g[j] - s.normal[j]);
            plus += (g[j] + s.normal[j]) * (g[j] + s.normal[j]);
        }
        let sign = if minus <= plus { -1.0 } else { 1.0 };
        let tau = minus.min(plus).sqrt();
        grad_sum += tau;
        if grad_weight != 0.0 && tau > 1e-300 {
            let mut v = [0.0; 3];
            for j in 0..d {
                v[j] = grad_weight * (g[j] + sign * s.normal[j]) / tau;
            }
            ws.vjp(net, 0.0, Some(&v[..d]), out);
        }
    }
    (value_sum, grad_sum)
}

/// Exact gradient of the sign-agnostic loss with the derivative term
/// (weight `lambda`) over a full batch, including the latent gradient
/// when `z` is present. The second-order path through the spatial
/// gradient is part of the computation.
pub fn loss_gradients(
    net: &ImplicitNet,
    z: Option<&[f64]>,
    batch: &SampleBatch,
    lambda: f64,
) -> Result<(LossValue, NetGradients), LossError> {
    if batch.values.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    let mut ws = Workspace::for_net(net);
    let mut out = NetGradients::zeros_for(net, z.is_some());
    let mv = batch.values.len() as f64;
    let mg = batch.grads.len().max(1) as f64;
    let (vsum, gsum) = accumulate_batch(
        net,
        z,
        &batch.values,
        &batch.grads,
        1.0 / mv,
        lambda / mg,
        &mut ws,
        &mut out,
    );
    let value_term = vsum / mv;
    let grad_term = gsum / mg;
    Ok((
        LossValue::new(value_term, grad_term, 0.0, lambda),
        out,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{forward, spatial_gradient};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_net(
        spatial: usize,
        latent: usize,
        hidden: usize,
        depth: usize,
        beta: f64,
        seed: u64,
    ) -> ImplicitNet {
        let mut net = ImplicitNet::build_decoder(spatial, latent, hidden, depth, beta);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in net.param_tensors_mut() {
            for p in t {
                *p = rng.random::<f64>() * 1.6 - 0.8;
            }
        }
        net
    }

    #[test]
    fn single_linear_layer_gradient_is_the_weight_row() {
        let mut net = ImplicitNet::build_decoder(3, 0, 4, 2, 100.0);
        // Make the hidden layer an identity-ish map by a linear trick:
        // easier to check f = w.x + c with depth 2 via zero hidden weights
        // is degenerate, so instead check against finite differences below.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in net.param_tensors_mut() {
            for p in t {
                *p = rng.random::<f64>() - 0.5;
            }
        }
        let x = [0.2, -0.4, 0.9];
        let g = spatial_gradient(&net, &x, None).unwrap();
        let step = 1e-5;
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += step;
            xm[k] -= step;
            let fd = (forward(&net, &xp, None).unwrap() - forward(&net, &xm, None).unwrap())
                / (2.0 * step);
            assert!((g[k] - fd).abs() < 1e-7, "{} vs {}", g[k], fd);
        }
    }

    #[test]
    fn spatial_gradient_matches_finite_differences() {
        for (case, &(spatial, latent, hidden, depth)) in [
            (2usize, 0usize, 24usize, 4usize),
            (3, 0, 16, 5),
            (3, 4, 12, 4),
            (2, 2, 10, 3),
        ]
        .iter()
        .enumerate()
        {
            let beta = if case % 2 == 0 { 100.0 } else { 10.0 };
            for trial in 0..25 {
                let net = random_net(spatial, latent, hidden, depth, beta, 1000 + trial);
                let mut rng = ChaCha8Rng::seed_from_u64(50 + trial);
                let x: Vec<f64> = (0..spatial).map(|_| rng.random::<f64>() - 0.5).collect();
                let z: Vec<f64> = (0..latent).map(|_| rng.random::<f64>() - 0.5).collect();
                let zr = (latent > 0).then_some(z.as_slice());
                let g = spatial_gradient(&net, &x, zr).unwrap();
                let gn = crate::linalg::norm(&g).max(1.0);
                let step = 1e-4;
                for k in 0..spatial {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += step;
                    xm[k] -= step;
                    let fd = (forward(&net, &xp, zr).unwrap() - forward(&net, &xm, zr).unwrap())
                        / (2.0 * step);
                    assert!(
                        (g[k] - fd).abs() / gn <= 1e-5,
                        "case {case} trial {trial}: {} vs {}",
                        g[k],
                        fd
                    );
                }
            }
        }
    }

    fn tiny_batch(dim: usize, seed: u64, n_values: usize, n_grads: usize) -> SampleBatch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n_values)
            .map(|_| {
                let mut point = [0.0; 3];
                for c in point.iter_mut().take(dim) {
                    *c = rng.random::<f64>() * 2.0 - 1.0;
                }
                ValueSample {
                    point,
                    h: rng.random::<f64>(),
                }
            })
            .collect();
        let grads = (0..n_grads)
            .map(|_| {
                let mut point = [0.0; 3];
                let mut normal = [0.0; 3];
                loop {
                    for c in normal.iter_mut().take(dim) {
                        *c = rng.random::<f64>() * 2.0 - 1.0;
                    }
                    let n = crate::linalg::norm3(normal);
                    if n > 0.1 {
                        for c in normal.iter_mut() {
                            *c /= n;
                        }
                        break;
                    }
                }
                for c in point.iter_mut().take(dim) {
                    *c = rng.random::<f64>() * 2.0 - 1.0;
                }
                GradSample { point, normal }
            })
            .collect();
        SampleBatch {
            dim,
            values,
            grads,
        }
    }

    fn loss_value_of(net: &ImplicitNet, z: Option<&[f64]>, batch: &SampleBatch, lambda: f64) -> f64 {
        let mut ws = Workspace::for_net(net);
        let d = batch.dim;
        let mut vs = 0.0;
        for s in &batch.values {
            let f = ws.eval(net, &s.point[..d], z);
            vs += (f.abs() - s.h).abs();
        }
        let mut gs = 0.0;
        for s in &batch.grads {
            let (_, g) = ws.eval_with_grad(net, &s.point[..d], z);
            let mut minus = 0.0;
            let mut plus = 0.0;
            for j in 0..d {
                minus += (g[j] - s.normal[j]) * (g[j] - s.normal[j]);
                plus += (g[j] + s.normal[j]) * (g[j] + s.normal[j]);
            }
            gs += minus.min(plus).sqrt();
        }
        vs / batch.values.len() as f64 + lambda * gs / batch.grads.len().max(1) as f64
    }

    #[test]
    fn loss_gradients_match_finite_differences_over_parameters() {
        for trial in 0..20 {
            let (spatial, latent, hidden, depth) = match trial % 4 {
                0 => (2, 0, 6, 3),
                1 => (3, 0, 8, 4),
                2 => (2, 3, 5, 4),
                _ => (3, 2, 7, 5),
            };
            let lambda = [0.0, 0.1, 1.0][trial % 3];
            let net = random_net(spatial, latent, hidden, depth, 8.0, 400 + trial as u64);
            let batch = tiny_batch(spatial, 900 + trial as u64, 6, 5);
            let mut rng = ChaCha8Rng::seed_from_u64(10 + trial as u64);
            let z: Vec<f64> = (0..latent).map(|_| rng.random::<f64>() - 0.5).collect();
            let zr = (latent > 0).then_some(z.as_slice());

            let (_, grads) = loss_gradients(&net, zr, &batch, lambda).unwrap();

            // Flatten the analytic gradient and probe a subset of
            // parameters with central differences.
            let gflat: Vec<f64> = grads.tensors().flatten().copied().collect();
            let gnorm = crate::linalg::norm(&gflat).max(1e-3);
            let step = 3e-6;
            let n_params = net.num_params();
            for probe in 0..24 {
                let target = (probe * 131 + trial * 17) % n_params;
                let mut np = net.clone();
                let mut nm = net.clone();
                perturb(&mut np, target, step);
                perturb(&mut nm, target, -step);
                let fd = (loss_value_of(&np, zr, &batch, lambda)
                    - loss_value_of(&nm, zr, &batch, lambda))
                    / (2.0 * step);
                let got = gflat[target];
                assert!(
                    (got - fd).abs() / gnorm <= 1e-4,
                    "trial {trial} param {target}: analytic {got} vs fd {fd}"
                );
            }

            // Latent gradient against finite differences too.
            if latent > 0 {
                let lat = grads.latent.as_ref().unwrap();
                for k in 0..latent {
                    let mut zp = z.clone();
                    let mut zm = z.clone();
                    zp[k] += step;
                    zm[k] -= step;
                    let fd = (loss_value_of(&net, Some(&zp), &batch, lambda)
                        - loss_value_of(&net, Some(&zm), &batch, lambda))
                        / (2.0 * step);
                    assert!(
                        (lat[k] - fd).abs() / gnorm.max(1.0) <= 1e-4,
                        "latent {k}: {} vs {fd}",
                        lat[k]
                    );
                }
            }
        }
    }

    fn perturb(net: &mut ImplicitNet, index: usize, eps: f64) {
        let mut seen = 0;
        for t in net.param_tensors_mut() {
            if index < seen + t.len() {
                t[index - seen] += eps;
                return;
            }
            seen += t.len();
        }
        panic!("parameter index out of range");
    }

    #[test]
    fn lambda_zero_equals_value_only_gradient() {
        let net = random_net(2, 0, 8, 4, 20.0, 3);
        let batch = tiny_batch(2, 4, 8, 8);
        let (loss0, g0) = loss_gradients(&net, None, &batch, 0.0).unwrap();
        let value_only = SampleBatch {
            dim: 2,
            values: batch.values.clone(),
            grads: alloc::vec::Vec::new(),
        };
        let (loss1, g1) = loss_gradients(&net, None, &value_only, 0.0).unwrap();
        assert_eq!(loss0.value_term, loss1.value_term);
        for (a, b) in g0.tensors().zip(g1.tensors()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn gradient_vanishes_at_exact_interpolant() {
        // One sample where f equals h exactly: the kink subgradient is 0.
        let mut net = ImplicitNet::build_decoder(2, 0, 4, 2, 100.0);
        net.layers[1].b[0] = 0.75;
        let batch = SampleBatch {
            dim: 2,
            values: alloc::vec![ValueSample {
                point: [0.3, 0.1, 0.0],
                h: 0.75,
            }],
            grads: alloc::vec::Vec::new(),
        };
        let (loss, grads) = loss_gradients(&net, None, &batch, 0.0).unwrap();
        assert_eq!(loss.total, 0.0);
        assert!(grads.tensors().flatten().all(|&g| g == 0.0));
    }
}
