//! From-scratch fully-connected Q-network: a fixed 47-32-16-1 architecture
//! with rectifier hidden layers and a linear output, analytic
//! backpropagation for squared-error loss, plain SGD, and per-step Polyak
//! averaging of a target copy.

use std::cell::Cell;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::letor::FEATURE_DIM;

/// Network input width: 46 document features plus one timestep feature.
pub const INPUT_DIM: usize = FEATURE_DIM + 1;
/// Hidden and output layer widths, input first.
pub const LAYER_DIMS: [usize; 4] = [INPUT_DIM, 32, 16, 1];

thread_local! {
    static FORWARD_PASSES: Cell<u64> = const { Cell::new(0) };
}

/// Forward passes executed on this thread since the last reset. Supports
/// complexity assertions on the greedy ranking loop.
pub fn forward_pass_count() -> u64 {
    FORWARD_PASSES.with(Cell::get)
}

pub fn reset_forward_pass_count() {
    FORWARD_PASSES.with(|c| c.set(0));
}

/// Encoded network input: the candidate document's features (optionally
/// normalized upstream) followed by the normalized timestep `t / n` for an
/// `n`-document query.
#[derive(Debug, Clone, PartialEq)]
pub struct QInput {
    values: [f64; INPUT_DIM],
}

impl QInput {
    pub fn encode(features: &[f64; FEATURE_DIM], t: usize, group_size: usize) -> Result<Self> {
        if group_size == 0 || t >= group_size {
            return Err(Error::InvalidArgument(format!(
                "timestep {t} outside query of size {group_size}"
            )));
        }
        if let Some(bad) = features.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite feature value {bad}"
            )));
        }
        let mut values = [0.0; INPUT_DIM];
        values[..FEATURE_DIM].copy_from_slice(features);
        values[FEATURE_DIM] = t as f64 / group_size as f64;
        Ok(QInput { values })
    }

    pub fn from_raw(values: [f64; INPUT_DIM]) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite input {bad}")));
        }
        Ok(QInput { values })
    }

    pub fn values(&self) -> &[f64; INPUT_DIM] {
        &self.values
    }
}

/// Weights and biases of one dense layer. Weights are row-major:
/// `weights[r * in_dim + c]` connects input `c` to output `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl LayerParams {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        LayerParams {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.in_dim + col]
    }

    pub fn set_weight(&mut self, row: usize, col: usize, value: f64) {
        self.weights[row * self.in_dim + col] = value;
    }

    pub fn bias(&self, row: usize) -> f64 {
        self.biases[row]
    }

    pub fn set_bias(&mut self, row: usize, value: f64) {
        self.biases[row] = value;
    }

    /// Row-major weight slice, `out_dim` rows of `in_dim`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    fn affine(&self, input: &[f64], out: &mut [f64]) {
        for (r, slot) in out.iter_mut().enumerate() {
            let row = &self.weights[r * self.in_dim..(r + 1) * self.in_dim];
            let mut acc = self.biases[r];
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            *slot = acc;
        }
    }
}

/// The 47-32-16-1 value approximator. Exactly three weight layers; hidden
/// activations are rectifiers, the output is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    layers: Vec<LayerParams>,
}

/// He-style initialization: zero-mean normal weights with variance
/// `2 / fan_in` per layer, zero biases. Deterministic per seed.
pub fn init_network(seed: u64) -> QNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(LAYER_DIMS.len() - 1);
    for pair in LAYER_DIMS.windows(2) {
        let (in_dim, out_dim) = (pair[0], pair[1]);
        let normal = Normal::new(0.0, (2.0 / in_dim as f64).sqrt()).expect("valid std");
        let mut layer = LayerParams::zeros(in_dim, out_dim);
        for w in &mut layer.weights {
            *w = normal.sample(&mut rng);
        }
        layers.push(layer);
    }
    QNetwork { layers }
}

impl QNetwork {
    /// All-zero parameters; useful as a fixture and for hand-built scorers.
    pub fn zeros() -> Self {
        QNetwork {
            layers: LAYER_DIMS
                .windows(2)
                .map(|pair| LayerParams::zeros(pair[0], pair[1]))
                .collect(),
        }
    }

    /// Rebuilds a network from explicit per-layer parameters, validating the
    /// fixed 47-32-16-1 shape.
    pub fn from_layers(layers: Vec<LayerParams>) -> Result<Self> {
        if layers.len() != LAYER_DIMS.len() - 1 {
            return Err(Error::ShapeMismatch(format!(
                "expected {} layers, got {}",
                LAYER_DIMS.len() - 1,
                layers.len()
            )));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.in_dim != LAYER_DIMS[i] || layer.out_dim != LAYER_DIMS[i + 1] {
                return Err(Error::ShapeMismatch(format!(
                    "layer {i} is {}x{}, expected {}x{}",
                    layer.out_dim,
                    layer.in_dim,
                    LAYER_DIMS[i + 1],
                    LAYER_DIMS[i]
                )));
            }
            if layer.weights.len() != layer.in_dim * layer.out_dim
                || layer.biases.len() != layer.out_dim
            {
                return Err(Error::ShapeMismatch(format!(
                    "layer {i} parameter storage does not match its dims"
                )));
            }
        }
        Ok(QNetwork { layers })
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layer_mut(&mut self, index: usize) -> &mut LayerParams {
        &mut self.layers[index]
    }

    /// Total parameter count (weights and biases).
    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Reads parameter `k` in the flat order: layer 0 weights row-major,
    /// layer 0 biases, layer 1 weights, ... Supports finite-difference
    /// sweeps without exposing storage.
    pub fn param(&self, mut k: usize) -> f64 {
        for layer in &self.layers {
            if k < layer.weights.len() {
                return layer.weights[k];
            }
            k -= layer.weights.len();
            if k < layer.biases.len() {
                return layer.biases[k];
            }
            k -= layer.biases.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut k: usize, value: f64) {
        for layer in &mut self.layers {
            if k < layer.weights.len() {
                layer.weights[k] = value;
                return;
            }
            k -= layer.weights.len();
            if k < layer.biases.len() {
                layer.biases[k] = value;
                return;
            }
            k -= layer.biases.len();
        }
        panic!("parameter index out of range");
    }

    /// Scalar Q-value for one encoded input. Pure in `(self, x)`.
    pub fn forward(&self, x: &QInput) -> f64 {
        FORWARD_PASSES.with(|c| c.set(c.get() + 1));
        let trace = self.forward_trace(x);
        trace.output
    }

    fn forward_trace(&self, x: &QInput) -> ForwardTrace {
        let mut pre1 = vec![0.0; self.layers[0].out_dim];
        self.layers[0].affine(&x.values, &mut pre1);
        let act1: Vec<f64> = pre1.iter().map(|&z| z.max(0.0)).collect();

        let mut pre2 = vec![0.0; self.layers[1].out_dim];
        self.layers[1].affine(&act1, &mut pre2);
        let act2: Vec<f64> = pre2.iter().map(|&z| z.max(0.0)).collect();

        let mut out = vec![0.0; self.layers[2].out_dim];
        self.layers[2].affine(&act2, &mut out);

        ForwardTrace {
            pre1,
            act1,
            pre2,
            act2,
            output: out[0],
        }
    }

    /// Squared-error loss `(forward(x) - target)^2` and its exact analytic
    /// gradient with respect to every parameter. The rectifier subgradient
    /// at exactly zero is taken as zero.
    pub fn backward(&self, x: &QInput, target: f64) -> (f64, GradientSet) {
        let trace = self.forward_trace(x);
        let residual = trace.output - target;
        let loss = residual * residual;

        let mut grads = GradientSet::zeros_like(self);

        // output layer: delta is d(loss)/d(pre-activation), linear output
        let delta3 = 2.0 * residual;
        for (c, &a) in trace.act2.iter().enumerate() {
            grads.layers[2].d_weights[c] = delta3 * a;
        }
        grads.layers[2].d_biases[0] = delta3;

        // second hidden layer
        let mut delta2 = vec![0.0; self.layers[1].out_dim];
        for (j, d) in delta2.iter_mut().enumerate() {
            if trace.pre2[j] > 0.0 {
                *d = self.layers[2].weight(0, j) * delta3;
            }
        }
        accumulate_layer_grads(&mut grads.layers[1], &delta2, &trace.act1);

        // first hidden layer
        let mut delta1 = vec![0.0; self.layers[0].out_dim];
        for (j, d) in delta1.iter_mut().enumerate() {
            if trace.pre1[j] > 0.0 {
                let mut acc = 0.0;
                for (k, &dk) in delta2.iter().enumerate() {
                    acc += self.layers[1].weight(k, j) * dk;
                }
                *d = acc;
            }
        }
        accumulate_layer_grads(&mut grads.layers[0], &delta1, &x.values);

        (loss, grads)
    }

    /// One SGD step: every parameter moves to `p - alpha * g`.
    pub fn apply_sgd(&mut self, grads: &GradientSet, alpha: f64) -> Result<()> {
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(Error::InvalidArgument("alpha must be positive".into()));
        }
        self.check_shapes(grads)?;
        for (layer, grad) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, g) in layer.weights.iter_mut().zip(&grad.d_weights) {
                *w -= alpha * g;
            }
            for (b, g) in layer.biases.iter_mut().zip(&grad.d_biases) {
                *b -= alpha * g;
            }
        }
        Ok(())
    }

    fn check_shapes(&self, grads: &GradientSet) -> Result<()> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::ShapeMismatch(format!(
                "gradient has {} layers, network has {}",
                grads.layers.len(),
                self.layers.len()
            )));
        }
        for (i, (layer, grad)) in self.layers.iter().zip(&grads.layers).enumerate() {
            if grad.d_weights.len() != layer.weights.len()
                || grad.d_biases.len() != layer.biases.len()
            {
                return Err(Error::ShapeMismatch(format!(
                    "gradient layer {i} does not match network layer {i}"
                )));
            }
        }
        Ok(())
    }
}

struct ForwardTrace {
    pre1: Vec<f64>,
    act1: Vec<f64>,
    pre2: Vec<f64>,
    act2: Vec<f64>,
    output: f64,
}

fn accumulate_layer_grads(grad: &mut LayerGrads, delta: &[f64], input: &[f64]) {
    let in_dim = input.len();
    for (r, &d) in delta.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let row = &mut grad.d_weights[r * in_dim..(r + 1) * in_dim];
        for (slot, &x) in row.iter_mut().zip(input) {
            *slot = d * x;
        }
        grad.d_biases[r] = d;
    }
}

/// Per-layer gradients, shape-matched to a [`QNetwork`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    layers: Vec<LayerGrads>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    d_weights: Vec<f64>,
    d_biases: Vec<f64>,
}

impl GradientSet {
    pub fn zeros_like(net: &QNetwork) -> Self {
        GradientSet {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrads {
                    d_weights: vec![0.0; l.weights.len()],
                    d_biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    /// Elementwise accumulation, used to sum minibatch gradients.
    pub fn add(&mut self, other: &GradientSet) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::ShapeMismatch(
                "gradient sets have different layer counts".into(),
            ));
        }
        for (mine, theirs) in self.layers.iter_mut().zip(&other.layers) {
            if mine.d_weights.len() != theirs.d_weights.len()
                || mine.d_biases.len() != theirs.d_biases.len()
            {
                return Err(Error::ShapeMismatch(
                    "gradient sets have different layer shapes".into(),
                ));
            }
            for (a, b) in mine.d_weights.iter_mut().zip(&theirs.d_weights) {
                *a += b;
            }
            for (a, b) in mine.d_biases.iter_mut().zip(&theirs.d_biases) {
                *a += b;
            }
        }
        Ok(())
    }

    /// Flat parameter-order read, mirroring [`QNetwork::param`].
    pub fn param(&self, mut k: usize) -> f64 {
        for layer in &self.layers {
            if k < layer.d_weights.len() {
                return layer.d_weights[k];
            }
            k -= layer.d_weights.len();
            if k < layer.d_biases.len() {
                return layer.d_biases[k];
            }
            k -= layer.d_biases.len();
        }
        panic!("parameter index out of range");
    }

    pub fn d_weight(&self, layer: usize, row: usize, col: usize) -> f64 {
        let l = &self.layers[layer];
        l.d_weights[row * (l.d_weights.len() / l.d_biases.len()) + col]
    }

    pub fn d_bias(&self, layer: usize, row: usize) -> f64 {
        self.layers[layer].d_biases[row]
    }
}

/// Online network (phi) with its slowly tracking target copy (phi prime).
#[derive(Debug, Clone)]
pub struct TargetPair {
    pub online: QNetwork,
    pub target: QNetwork,
    tau: f64,
}

impl TargetPair {
    /// Starts the target as an exact copy of the online network.
    pub fn new(online: QNetwork, tau: f64) -> Result<Self> {
        if !(0.0 < tau && tau < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tau must lie in (0,1), got {tau}"
            )));
        }
        let target = online.clone();
        Ok(TargetPair { online, target, tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Per-step soft update: every target parameter becomes
    /// `tau * target + (1 - tau) * online`. The online network is untouched.
    pub fn polyak_update(&mut self) {
        for (tl, ol) in self.target.layers.iter_mut().zip(&self.online.layers) {
            for (t, o) in tl.weights.iter_mut().zip(&ol.weights) {
                *t = self.tau * *t + (1.0 - self.tau) * o;
            }
            for (t, o) in tl.biases.iter_mut().zip(&ol.biases) {
                *t = self.tau * *t + (1.0 - self.tau) * o;
            }
        }
    }
}
