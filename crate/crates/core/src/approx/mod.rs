//! Function approximators with exact reverse-mode gradients.
//!
//! Small fully connected networks over `f64` with hand-written forward and
//! backward passes. Three roles are built on top of the same machinery:
//!
//! - a Gaussian actor head (state-dependent mean, state-independent
//!   log-σ),
//! - a Gaussian disturber head whose sampled force is scaled to Newtons
//!   and radially clipped to the intensity limit,
//! - a double-head critic producing the overall value and a nonnegative
//!   cost value (softplus output map).
//!
//! Gradients are exact: a recorded forward trace is replayed backwards, so
//! a finite-difference check agrees to first order on every parameter.
//! Backward requires the trace by construction; there is no way to call it
//! without a forward pass.

mod adam;
mod policy;

pub use adam::Adam;
pub use policy::{
    clip_force_l2, entropy, log_prob, log_prob_grad, sample_and_logprob, sample_force_clipped, PolicyOutput,
    SampledForce,
};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use rand::Rng;

pub const LOG_STD_MIN: f64 = -6.907755278982137; // ln 1e-3
pub const LOG_STD_MAX: f64 = 0.6931471805599453; // ln 2

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Elu,
}

/// Weights, biases, and (for policy heads) the log-σ vector of one MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub widths: Vec<usize>,
    pub weights: Vec<Mat>,
    pub biases: Vec<Vec<f64>>,
    pub activation: Activation,
    pub log_std: Option<Vec<f64>>,
}

/// Recorded forward pass: `activations[0]` is the input batch and
/// `activations[L]` the raw (linear) output.
pub struct ForwardTrace {
    pub activations: Vec<Mat>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Mat {
        self.activations.last().expect("trace has an output")
    }
}

/// Gradients in the same shape as [`MlpParams`].
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weights: Vec<Mat>,
    pub biases: Vec<Vec<f64>>,
    pub log_std: Option<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        MlpGrads {
            weights: params.weights.iter().map(|w| Mat::zeros(w.rows(), w.cols())).collect(),
            biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            log_std: params.log_std.as_ref().map(|s| vec![0.0; s.len()]),
        }
    }

    pub fn add(&mut self, other: &MlpGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        if let (Some(a), Some(b)) = (self.log_std.as_mut(), other.log_std.as_ref()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.weights {
            for x in w.data_mut() {
                *x *= factor;
            }
        }
        for b in &mut self.biases {
            for x in b.iter_mut() {
                *x *= factor;
            }
        }
        if let Some(s) = self.log_std.as_mut() {
            for x in s.iter_mut() {
                *x *= factor;
            }
        }
    }

    /// Flatten in the parameter declaration order (per layer: weights
    /// row-major, then bias; log-σ last).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        if let Some(s) = &self.log_std {
            out.extend_from_slice(s);
        }
        out
    }
}

fn orthogonalize_columns(m: &mut Mat) {
    // Modified Gram-Schmidt over columns; falls back to leaving a column
    // unnormalized only in the degenerate all-zero case.
    let (rows, cols) = (m.rows(), m.cols());
    for j in 0..cols {
        for k in 0..j {
            let mut dot = 0.0;
            for i in 0..rows {
                dot += m.get(i, j) * m.get(i, k);
            }
            for i in 0..rows {
                let v = m.get(i, j) - dot * m.get(i, k);
                m.set(i, j, v);
            }
        }
        let mut norm = 0.0;
        for i in 0..rows {
            norm += m.get(i, j) * m.get(i, j);
        }
        let norm = norm.sqrt();
        if norm > 1e-12 {
            for i in 0..rows {
                m.set(i, j, m.get(i, j) / norm);
            }
        }
    }
}

impl MlpParams {
    /// Orthogonal-style initialization; the final layer uses `final_gain`
    /// so fresh policies start near zero mean.
    pub fn init<R: Rng>(
        widths: &[usize],
        activation: Activation,
        log_std_init: Option<f64>,
        final_gain: f64,
        rng: &mut R,
    ) -> Self {
        assert!(widths.len() >= 2, "need at least input and output widths");
        let layers = widths.len() - 1;
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for l in 0..layers {
            let (fan_in, fan_out) = (widths[l], widths[l + 1]);
            let mut w = Mat::zeros(fan_in, fan_out);
            for v in w.data_mut() {
                *v = sample_standard_normal(rng);
            }
            if fan_in >= fan_out {
                orthogonalize_columns(&mut w);
            } else {
                let mut t = w.transposed();
                orthogonalize_columns(&mut t);
                w = t.transposed();
            }
            let gain = if l + 1 == layers { final_gain } else { 1.0 };
            for v in w.data_mut() {
                *v *= gain;
            }
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        let log_std = log_std_init.map(|v| vec![v.clamp(LOG_STD_MIN, LOG_STD_MAX); *widths.last().unwrap()]);
        MlpParams { widths: widths.to_vec(), weights, biases, activation, log_std }
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        let net: usize = self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        net + self.log_std.as_ref().map_or(0, |s| s.len())
    }

    fn apply_activation(&self, z: &mut Mat) {
        match self.activation {
            Activation::Tanh => {
                for v in z.data_mut() {
                    *v = v.tanh();
                }
            }
            Activation::Elu => {
                for v in z.data_mut() {
                    if *v <= 0.0 {
                        *v = v.exp_m1();
                    }
                }
            }
        }
    }

    /// Derivative of the activation expressed through its output value.
    fn activation_derivative(&self, a: f64) -> f64 {
        match self.activation {
            Activation::Tanh => 1.0 - a * a,
            Activation::Elu => {
                if a > 0.0 {
                    1.0
                } else {
                    a + 1.0
                }
            }
        }
    }

    /// Batched forward pass (rows are samples). The final layer is linear.
    pub fn forward(&self, input: &Mat) -> Result<Mat> {
        let mut trace = self.forward_trace(input)?;
        Ok(trace.activations.pop().expect("trace has an output"))
    }

    pub fn forward_trace(&self, input: &Mat) -> Result<ForwardTrace> {
        if input.cols() != self.input_dim() {
            return Err(Error::InvalidArgument(format!(
                "feature width {} does not match network input {}",
                input.cols(),
                self.input_dim()
            )));
        }
        let layers = self.weights.len();
        let mut activations = Vec::with_capacity(layers + 1);
        activations.push(input.clone());
        for l in 0..layers {
            let mut z = activations[l].affine(&self.weights[l], &self.biases[l]);
            if l + 1 < layers {
                self.apply_activation(&mut z);
            }
            activations.push(z);
        }
        if !activations.last().unwrap().is_finite() {
            return Err(Error::NonFinite("network output".into()));
        }
        Ok(ForwardTrace { activations })
    }

    /// Exact reverse-mode gradients of a scalar loss given `d_output =
    /// ∂loss/∂output` for every sample in the trace.
    pub fn backward(&self, trace: &ForwardTrace, d_output: &Mat) -> MlpGrads {
        let layers = self.weights.len();
        assert_eq!(trace.activations.len(), layers + 1, "trace does not match network");
        assert_eq!(d_output.rows(), trace.activations[0].rows(), "batch size mismatch");
        assert_eq!(d_output.cols(), self.output_dim(), "output width mismatch");

        let mut grads = MlpGrads::zeros_like(self);
        let mut delta = d_output.clone();
        for l in (0..layers).rev() {
            grads.weights[l] = trace.activations[l].t_matmul(&delta);
            grads.biases[l] = delta.col_sums();
            if l > 0 {
                let wt = self.weights[l].transposed();
                let mut prev = delta.matmul(&wt);
                let act = &trace.activations[l];
                for (p, a) in prev.data_mut().iter_mut().zip(act.data()) {
                    *p *= self.activation_derivative(*a);
                }
                delta = prev;
            }
        }
        grads
    }

    /// Parameters flattened per layer (weights row-major, then bias),
    /// log-σ last.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        if let Some(s) = &self.log_std {
            out.extend_from_slice(s);
        }
        out
    }

    /// Overwrite parameters from a flat slice in declaration order.
    pub fn assign_from_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length mismatch");
        let mut k = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            let n = w.data().len();
            w.data_mut().copy_from_slice(&flat[k..k + n]);
            k += n;
            b.copy_from_slice(&flat[k..k + b.len()]);
            k += b.len();
        }
        if let Some(s) = &mut self.log_std {
            s.copy_from_slice(&flat[k..k + s.len()]);
            for v in s.iter_mut() {
                *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
            }
        }
    }

    /// Subtract an update vector (optimizer step) in declaration order.
    /// log-σ entries stay inside their clamp.
    pub fn apply_update(&mut self, update: &[f64]) {
        assert_eq!(update.len(), self.param_count(), "update length mismatch");
        let mut k = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            for v in w.data_mut() {
                *v -= update[k];
                k += 1;
            }
            for v in b.iter_mut() {
                *v -= update[k];
                k += 1;
            }
        }
        if let Some(s) = &mut self.log_std {
            for v in s.iter_mut() {
                *v = (*v - update[k]).clamp(LOG_STD_MIN, LOG_STD_MAX);
                k += 1;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
            && self.log_std.as_ref().is_none_or(|s| s.iter().all(|v| v.is_finite()))
    }
}

fn sample_standard_normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// Double-head critic read-out: overall value is the raw first output,
/// the cost value is softplus of the second so it is always nonnegative.
pub fn critic_heads(raw: &Mat) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(raw.cols(), 2, "critic must have two outputs");
    let mut v = Vec::with_capacity(raw.rows());
    let mut v_cost = Vec::with_capacity(raw.rows());
    for i in 0..raw.rows() {
        v.push(raw.get(i, 0));
        v_cost.push(softplus(raw.get(i, 1)));
    }
    (v, v_cost)
}

pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn small_net(seed: u64) -> MlpParams {
        MlpParams::init(&[4, 8, 8, 2], Activation::Tanh, Some(-0.5), 0.01, &mut rng::stream(&[seed]))
    }

    #[test]
    fn zero_weights_give_zero_mean() {
        let mut net = small_net(0);
        let flat = vec![0.0; net.param_count()];
        net.assign_from_flat(&flat);
        let out = net.forward(&Mat::from_vec(1, 4, vec![0.3, -0.2, 1.0, 0.5])).unwrap();
        assert_eq!(out.data(), &[0.0, 0.0]);
    }

    #[test]
    fn forward_deterministic() {
        let net = small_net(1);
        let x = Mat::from_vec(2, 4, vec![0.1, 0.2, 0.3, 0.4, -0.1, -0.2, -0.3, -0.4]);
        let a = net.forward(&x).unwrap();
        let b = net.forward(&x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lipschitz_bound_from_weight_norms() {
        let net = small_net(2);
        let bound: f64 = net
            .weights
            .iter()
            .map(|w| w.data().iter().map(|v| v * v).sum::<f64>().sqrt())
            .product();
        let x = Mat::from_vec(1, 4, vec![0.5, -0.5, 0.25, 0.0]);
        let eps = 1e-7;
        let mut x2 = x.clone();
        x2.data_mut()[0] += eps;
        let y1 = net.forward(&x).unwrap();
        let y2 = net.forward(&x2).unwrap();
        let dy: f64 = y1.data().iter().zip(y2.data()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        assert!(dy <= bound * eps * (1.0 + 1e-6), "dy={dy} bound={}", bound * eps);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        // Loss = ½‖output − target‖² over a small batch, both activations.
        for activation in [Activation::Tanh, Activation::Elu] {
            let mut net = MlpParams::init(&[3, 6, 2], activation, None, 0.5, &mut rng::stream(&[7]));
            let x = Mat::from_vec(2, 3, vec![0.2, -0.4, 0.6, -0.1, 0.3, 0.9]);
            let target = Mat::from_vec(2, 2, vec![0.5, -0.5, 0.1, 0.2]);
            let loss = |net: &MlpParams| -> f64 {
                let out = net.forward(&x).unwrap();
                out.data().iter().zip(target.data()).map(|(o, t)| 0.5 * (o - t) * (o - t)).sum()
            };
            let trace = net.forward_trace(&x).unwrap();
            let mut d_out = trace.output().clone();
            for (d, t) in d_out.data_mut().iter_mut().zip(target.data()) {
                *d -= t;
            }
            let grads = net.backward(&trace, &d_out).flatten();

            let flat = net.flatten();
            let h = 1e-5;
            for (idx, g) in grads.iter().enumerate() {
                let mut plus = flat.clone();
                plus[idx] += h;
                let mut minus = flat.clone();
                minus[idx] -= h;
                net.assign_from_flat(&plus);
                let lp = loss(&net);
                net.assign_from_flat(&minus);
                let lm = loss(&net);
                net.assign_from_flat(&flat);
                let fd = (lp - lm) / (2.0 * h);
                let denom = fd.abs().max(g.abs()).max(1e-6);
                assert!(
                    (fd - g).abs() / denom < 1e-4,
                    "param {idx}: analytic {g} vs fd {fd} ({activation:?})"
                );
            }
        }
    }

    #[test]
    fn constant_loss_zero_gradient() {
        let net = small_net(3);
        let x = Mat::from_vec(1, 4, vec![0.1, 0.2, 0.3, 0.4]);
        let trace = net.forward_trace(&x).unwrap();
        let d_out = Mat::zeros(1, 2);
        let grads = net.backward(&trace, &d_out);
        assert!(grads.flatten().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn identity_network_linear_gradients() {
        // Single linear layer, loss = ½‖Wx‖²: dW = x ⊗ (Wx).
        let mut net = MlpParams::init(&[2, 2], Activation::Tanh, None, 1.0, &mut rng::stream(&[4]));
        net.assign_from_flat(&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]); // identity W, zero bias
        let x = Mat::from_vec(1, 2, vec![0.7, -0.3]);
        let trace = net.forward_trace(&x).unwrap();
        let d_out = trace.output().clone();
        let grads = net.backward(&trace, &d_out);
        // outer product x ⊗ x
        assert!((grads.weights[0].get(0, 0) - 0.49).abs() < 1e-12);
        assert!((grads.weights[0].get(0, 1) - -0.21).abs() < 1e-12);
        assert!((grads.weights[0].get(1, 0) - -0.21).abs() < 1e-12);
        assert!((grads.weights[0].get(1, 1) - 0.09).abs() < 1e-12);
    }

    #[test]
    fn softplus_nonnegative_and_smooth() {
        for z in [-50.0, -5.0, 0.0, 3.0, 40.0] {
            assert!(softplus(z) >= 0.0);
            let fd = (softplus(z + 1e-6) - softplus(z - 1e-6)) / 2e-6;
            assert!((fd - sigmoid(z)).abs() < 1e-6);
        }
    }

    #[test]
    fn critic_cost_head_nonnegative() {
        let net = MlpParams::init(&[3, 8, 2], Activation::Tanh, None, 1.0, &mut rng::stream(&[5]));
        let x = Mat::from_vec(4, 3, vec![5.0, -3.0, 2.0, -8.0, 1.0, 0.0, 0.3, 0.3, 0.3, -9.9, 9.9, -9.9]);
        let raw = net.forward(&x).unwrap();
        let (_, v_cost) = critic_heads(&raw);
        assert!(v_cost.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn log_std_clamped_after_updates() {
        let mut net = small_net(6);
        let mut update = vec![0.0; net.param_count()];
        let n = update.len();
        update[n - 1] = 100.0; // would push log σ far below the floor
        update[n - 2] = -100.0; // and far above the ceiling
        net.apply_update(&update);
        let s = net.log_std.as_ref().unwrap();
        assert_eq!(s[1], LOG_STD_MIN);
        assert_eq!(s[0], LOG_STD_MAX);
    }
}
