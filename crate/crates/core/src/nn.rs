//! Dense feed-forward networks with hand-written reverse-mode gradients.
//!
//! Weights are stored `in × out`, so row `r` of the first layer holds every
//! connection leaving input feature `r`. Group sparsity is a statement about
//! whole first-layer rows.

use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the cached pre- and post-activation.
    #[inline]
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => post * (1.0 - post),
            Activation::Identity => 1.0,
        }
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    weights: Matrix,
    bias: Option<Vec<f64>>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Option<Vec<f64>>, activation: Activation) -> Result<Self> {
        if let Some(b) = &bias {
            if b.len() != weights.cols() {
                return Err(Error::dims(format!(
                    "bias has {} entries for a layer with {} outputs",
                    b.len(),
                    weights.cols()
                )));
            }
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    pub fn bias(&self) -> Option<&[f64]> {
        self.bias.as_deref()
    }

    pub fn bias_mut(&mut self) -> Option<&mut [f64]> {
        self.bias.as_deref_mut()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }
}

/// Which first-layer rows a backward pass or update touches.
#[derive(Clone, Copy, Debug)]
pub enum FirstLayerRows<'a> {
    All,
    Only(&'a [usize]),
}

/// Cached values of one forward pass, consumed by [`Network::backward`].
#[derive(Clone, Debug)]
pub struct ForwardPass {
    input: Matrix,
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
}

impl ForwardPass {
    /// Raw output scores (`batch × out`).
    pub fn output(&self) -> &Matrix {
        self.post.last().expect("network has at least one layer")
    }

    pub fn into_output(mut self) -> Matrix {
        self.post.pop().expect("network has at least one layer")
    }

    pub fn input(&self) -> &Matrix {
        &self.input
    }

    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre
    }

    pub fn post_activations(&self) -> &[Matrix] {
        &self.post
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    weights: Vec<Matrix>,
    biases: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            weights: net
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.in_dim(), l.out_dim()))
                .collect(),
            biases: net
                .layers
                .iter()
                .map(|l| l.bias.as_ref().map(|b| vec![0.0; b.len()]))
                .collect(),
        }
    }

    pub fn weights(&self, layer: usize) -> &Matrix {
        &self.weights[layer]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut Matrix {
        &mut self.weights[layer]
    }

    pub fn bias(&self, layer: usize) -> Option<&[f64]> {
        self.biases[layer].as_deref()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    fn matches(&self, net: &Network) -> bool {
        self.weights.len() == net.layers.len()
            && self
                .weights
                .iter()
                .zip(&net.layers)
                .all(|(g, l)| g.shape() == l.weights.shape())
            && self
                .biases
                .iter()
                .zip(&net.layers)
                .all(|(g, l)| g.as_ref().map(Vec::len) == l.bias.as_ref().map(Vec::len))
    }
}

/// A stack of dense layers. The first layer never has a bias and the last
/// layer is linear; losses apply their own link.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    layers: Vec<DenseLayer>,
    /// Per input feature: true once the row was pruned. Pruned rows are zero
    /// and no update ever touches them again.
    pruned_rows: Vec<bool>,
}

impl Network {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::invalid("a network needs at least one layer"))?;
        if first.bias.is_some() {
            return Err(Error::invalid("the first layer must not have a bias"));
        }
        if layers.last().map(|l| l.activation) != Some(Activation::Identity) {
            return Err(Error::invalid("the output layer must use the identity activation"));
        }
        for (j, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::dims(format!(
                    "layer {j} outputs {} values but layer {} expects {}",
                    pair[0].out_dim(),
                    j + 1,
                    pair[1].in_dim()
                )));
            }
        }
        let p = first.in_dim();
        Ok(Network {
            layers,
            pruned_rows: vec![false; p],
        })
    }

    /// Builds a network for `dims = [p, h1, ..., out]` with weights drawn from
    /// `U(-1/√fan_in, 1/√fan_in)` and zero biases.
    pub fn init(dims: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::invalid(format!(
                "layer dims need an input and an output size, got {dims:?}"
            )));
        }
        if dims.contains(&0) {
            return Err(Error::invalid(format!("layer dims must be positive, got {dims:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_layers = dims.len() - 1;
        let mut layers = Vec::with_capacity(n_layers);
        for j in 0..n_layers {
            let (fan_in, fan_out) = (dims[j], dims[j + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            let data = (0..fan_in * fan_out).map(|_| dist.sample(&mut rng)).collect();
            let weights = Matrix::from_vec(fan_in, fan_out, data)?;
            let bias = (j > 0).then(|| vec![0.0; fan_out]);
            let act = if j + 1 == n_layers {
                Activation::Identity
            } else {
                activation
            };
            layers.push(DenseLayer::new(weights, bias, act)?);
        }
        Network::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Mutable access for tests and tooling. Pruned rows stay pruned for
    /// [`Network::apply_update`], but writes made here are not checked.
    pub fn layer_mut(&mut self, j: usize) -> &mut DenseLayer {
        &mut self.layers[j]
    }

    pub fn first_layer(&self) -> &DenseLayer {
        &self.layers[0]
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// `q`: width of the first layer's output.
    pub fn first_hidden_dim(&self) -> usize {
        self.layers[0].out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.as_ref().map_or(0, Vec::len))
            .sum()
    }

    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(DenseLayer::out_dim))
            .collect()
    }

    pub fn pruned_rows(&self) -> &[bool] {
        &self.pruned_rows
    }

    /// Zeroes the given first-layer rows and freezes them for good.
    pub(crate) fn prune_rows(&mut self, rows: &[usize]) {
        let w = &mut self.layers[0].weights;
        for &r in rows {
            w.row_mut(r).fill(0.0);
            self.pruned_rows[r] = true;
        }
    }

    pub fn forward(&self, batch: &Matrix) -> Result<ForwardPass> {
        if batch.cols() != self.input_dim() {
            return Err(Error::dims(format!(
                "batch has {} columns, network expects {}",
                batch.cols(),
                self.input_dim()
            )));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = post.last().unwrap_or(batch);
            let mut z = input.matmul(&layer.weights)?;
            if let Some(b) = &layer.bias {
                for r in 0..z.rows() {
                    z.row_mut(r).iter_mut().zip(b).for_each(|(v, bj)| *v += bj);
                }
            }
            let mut a = z.clone();
            if layer.activation != Activation::Identity {
                a.as_mut_slice()
                    .iter_mut()
                    .for_each(|v| *v = layer.activation.apply(*v));
            }
            pre.push(z);
            post.push(a);
        }
        Ok(ForwardPass {
            input: batch.clone(),
            pre,
            post,
        })
    }

    /// Output scores given the first layer's pre-activation `z = X θ`.
    pub fn predict_from_first_pre(&self, mut z: Matrix) -> Result<Matrix> {
        if z.cols() != self.first_hidden_dim() {
            return Err(Error::dims(format!(
                "pre-activation has {} columns, first layer has {} units",
                z.cols(),
                self.first_hidden_dim()
            )));
        }
        for (j, layer) in self.layers.iter().enumerate() {
            if j > 0 {
                z = z.matmul(&layer.weights)?;
                if let Some(b) = &layer.bias {
                    for r in 0..z.rows() {
                        z.row_mut(r).iter_mut().zip(b).for_each(|(v, bj)| *v += bj);
                    }
                }
            }
            if layer.activation != Activation::Identity {
                z.as_mut_slice()
                    .iter_mut()
                    .for_each(|v| *v = layer.activation.apply(*v));
            }
        }
        Ok(z)
    }

    /// Output scores only.
    pub fn predict(&self, batch: &Matrix) -> Result<Matrix> {
        Ok(self.forward(batch)?.into_output())
    }

    /// Reverse-mode gradients for a loss whose gradient w.r.t. the output
    /// scores is `output_grad`. The loss is responsible for batch averaging.
    ///
    /// Only the requested first-layer rows get a gradient; the others are
    /// left at zero.
    pub fn backward(&self, pass: &ForwardPass, output_grad: &Matrix, rows: FirstLayerRows<'_>) -> Result<Gradients> {
        let b = pass.input.rows();
        if pass.pre.len() != self.layers.len() || pass.input.cols() != self.input_dim() {
            return Err(Error::dims("forward pass was not produced by this network"));
        }
        if output_grad.shape() != (b, self.output_dim()) {
            return Err(Error::dims(format!(
                "output gradient is {}x{}, expected {}x{}",
                output_grad.rows(),
                output_grad.cols(),
                b,
                self.output_dim()
            )));
        }
        let mut grads = Gradients::zeros_like(self);
        let last = self.layers.len() - 1;
        let mut delta = output_grad.clone();
        apply_derivative(
            &mut delta,
            self.layers[last].activation,
            &pass.pre[last],
            &pass.post[last],
        );

        for j in (0..self.layers.len()).rev() {
            let layer = &self.layers[j];
            if let Some(gb) = &mut grads.biases[j] {
                for r in 0..b {
                    gb.iter_mut().zip(delta.row(r)).for_each(|(g, d)| *g += d);
                }
            }
            if j > 0 {
                grads.weights[j] = pass.post[j - 1].t_matmul(&delta)?;
                let mut next = delta.matmul_t(&layer.weights)?;
                let below = &self.layers[j - 1];
                apply_derivative(&mut next, below.activation, &pass.pre[j - 1], &pass.post[j - 1]);
                delta = next;
            } else {
                match rows {
                    FirstLayerRows::All => grads.weights[0] = pass.input.t_matmul(&delta)?,
                    FirstLayerRows::Only(selected) => {
                        let gw = &mut grads.weights[0];
                        for &r in selected {
                            if r >= self.input_dim() {
                                return Err(Error::dims(format!("first-layer row {r} out of range")));
                            }
                            let out = gw.row_mut(r);
                            for s in 0..b {
                                let x = pass.input.get(s, r);
                                if x != 0.0 {
                                    out.iter_mut().zip(delta.row(s)).for_each(|(g, d)| *g += x * d);
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(grads)
    }

    /// `params ← params − lr · grads`. First-layer rows outside `rows`, and
    /// pruned rows in every case, are left untouched.
    pub fn apply_update(&mut self, grads: &Gradients, lr: f64, rows: FirstLayerRows<'_>) -> Result<()> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be positive, got {lr}")));
        }
        if !grads.matches(self) {
            return Err(Error::dims("gradient shapes do not match the network"));
        }
        let p = self.input_dim();
        if let FirstLayerRows::Only(selected) = rows {
            if let Some(&r) = selected.iter().find(|&&r| r >= p) {
                return Err(Error::dims(format!("first-layer row {r} out of range")));
            }
        }
        for (j, layer) in self.layers.iter_mut().enumerate() {
            if j == 0 {
                let gw = &grads.weights[0];
                let mut step_row = |r: usize| {
                    if !self.pruned_rows[r] {
                        layer
                            .weights
                            .row_mut(r)
                            .iter_mut()
                            .zip(gw.row(r))
                            .for_each(|(w, g)| *w -= lr * g);
                    }
                };
                match rows {
                    FirstLayerRows::All => (0..p).for_each(&mut step_row),
                    FirstLayerRows::Only(selected) => selected.iter().for_each(|&r| step_row(r)),
                }
            } else {
                layer
                    .weights
                    .as_mut_slice()
                    .iter_mut()
                    .zip(grads.weights[j].as_slice())
                    .for_each(|(w, g)| *w -= lr * g);
            }
            if let (Some(b), Some(gb)) = (&mut layer.bias, &grads.biases[j]) {
                b.iter_mut().zip(gb).for_each(|(w, g)| *w -= lr * g);
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && l.bias.as_ref().is_none_or(|b| b.iter().all(|v| v.is_finite())))
    }

    pub fn to_snapshot(&self) -> NetworkSnapshot {
        NetworkSnapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            dims: self.dims(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerSnapshot {
                    activation: l.activation,
                    weights: l.weights.as_slice().to_vec(),
                    bias: l.bias.clone(),
                })
                .collect(),
            pruned_rows: self
                .pruned_rows
                .iter()
                .enumerate()
                .filter_map(|(r, &p)| p.then_some(r))
                .collect(),
        }
    }

    pub fn from_snapshot(snap: &NetworkSnapshot) -> Result<Self> {
        if snap.format != SNAPSHOT_FORMAT {
            return Err(Error::Snapshot(format!(
                "unsupported format tag {:?} (expected {SNAPSHOT_FORMAT:?})",
                snap.format
            )));
        }
        if snap.dims.len() != snap.layers.len() + 1 {
            return Err(Error::Snapshot(format!(
                "{} dims listed for {} layers",
                snap.dims.len(),
                snap.layers.len()
            )));
        }
        let layers = snap
            .layers
            .iter()
            .enumerate()
            .map(|(j, l)| {
                let w = Matrix::from_vec(snap.dims[j], snap.dims[j + 1], l.weights.clone())?;
                DenseLayer::new(w, l.bias.clone(), l.activation)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut net = Network::new(layers)?;
        for &r in &snap.pruned_rows {
            if r >= net.input_dim() {
                return Err(Error::Snapshot(format!("pruned row {r} out of range")));
            }
            if net.layers[0].weights.row(r).iter().any(|&w| w != 0.0) {
                return Err(Error::Snapshot(format!("pruned row {r} has nonzero weights")));
            }
            net.pruned_rows[r] = true;
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(&self.to_snapshot())?;
        std::fs::write(path, json).map_err(|e| Error::io_at(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        Network::from_snapshot(&serde_json::from_str(&text)?)
    }
}

/// Builds a network; see [`Network::init`].
pub fn init_network(dims: &[usize], activation: Activation, seed: u64) -> Result<Network> {
    Network::init(dims, activation, seed)
}

fn apply_derivative(delta: &mut Matrix, act: Activation, pre: &Matrix, post: &Matrix) {
    if act == Activation::Identity {
        return;
    }
    delta
        .as_mut_slice()
        .iter_mut()
        .zip(pre.as_slice().iter().zip(post.as_slice()))
        .for_each(|(d, (&z, &a))| *d *= act.derivative(z, a));
}

pub const SNAPSHOT_FORMAT: &str = "grpsparse-network/1";

/// On-disk parameter snapshot. Weights are row-major `in × out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSnapshot {
    pub format: String,
    pub dims: Vec<usize>,
    pub layers: Vec<LayerSnapshot>,
    pub pruned_rows: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSnapshot {
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}
