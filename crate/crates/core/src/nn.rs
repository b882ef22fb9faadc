//! Dense multilayer perceptrons with hand-derived backpropagation.
//!
//! Layers are affine maps `z = x W^T + b` followed by an elementwise
//! activation. Dropout, when requested, is applied to the network input only
//! (inverted form: surviving entries are scaled by `1/(1-rate)` at train
//! time, so evaluation needs no correction).

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `a = f(z)`.
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Sigmoid => 1,
            Activation::Identity => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Activation> {
        match tag {
            0 => Ok(Activation::Relu),
            1 => Ok(Activation::Sigmoid),
            2 => Ok(Activation::Identity),
            t => Err(Error::format(format!("unknown activation tag {t}"))),
        }
    }
}

/// One dense layer: weight is `(out x in)`, bias has length `out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Ordered stack of dense layers.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    layers: Vec<Layer>,
}

impl MlpParams {
    /// Validates dimension chaining and finiteness.
    pub fn new(layers: Vec<Layer>) -> Result<MlpParams> {
        if layers.is_empty() {
            return Err(Error::validation("an MLP needs at least one layer"));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.weight.rows() {
                return Err(Error::shape(format!(
                    "layer {i}: bias length {} vs weight rows {}",
                    layer.bias.len(),
                    layer.weight.rows()
                )));
            }
            layer.weight.ensure_finite(&format!("layer {i} weight"))?;
            if !layer.bias.iter().all(|v| v.is_finite()) {
                return Err(Error::validation(format!("layer {i} bias is non-finite")));
            }
            if i + 1 < layers.len() && layers[i + 1].weight.cols() != layer.weight.rows() {
                return Err(Error::shape(format!(
                    "layer {} input dim {} does not chain to layer {i} output dim {}",
                    i + 1,
                    layers[i + 1].weight.cols(),
                    layer.weight.rows()
                )));
            }
        }
        Ok(MlpParams { layers })
    }

    /// Glorot-uniform weights (`+-sqrt(6/(fan_in+fan_out))`), zero biases.
    /// `dims` chains input through hidden sizes to the output;
    /// `activations` has one entry per layer.
    pub fn glorot(dims: &[usize], activations: &[Activation], rng: &mut impl Rng) -> Result<MlpParams> {
        if dims.len() < 2 {
            return Err(Error::validation("need at least an input and an output dim"));
        }
        if activations.len() != dims.len() - 1 {
            return Err(Error::validation(format!(
                "{} activations for {} layers",
                activations.len(),
                dims.len() - 1
            )));
        }
        if dims.contains(&0) {
            return Err(Error::validation("zero-sized layer"));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (i, &act) in activations.iter().enumerate() {
            let (fan_in, fan_out) = (dims[i], dims[i + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut data = Vec::with_capacity(fan_in * fan_out);
            for _ in 0..fan_in * fan_out {
                data.push(rng.random_range(-bound..bound));
            }
            layers.push(Layer {
                weight: Matrix::from_vec(fan_out, fan_in, data)?,
                bias: vec![0.0; fan_out],
                activation: act,
            });
        }
        MlpParams::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").weight.rows()
    }

    /// Flat views over every parameter tensor (weight, then bias, per layer).
    /// Order matches [`MlpGrads::grad_slices`].
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for layer in &mut self.layers {
            out.push(layer.weight.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.rows() * l.weight.cols() + l.bias.len())
            .sum()
    }
}

/// Gradients mirroring an [`MlpParams`] layout.
#[derive(Clone, Debug)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrads>,
}

#[derive(Clone, Debug)]
pub struct LayerGrads {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> MlpGrads {
        MlpGrads {
            layers: params
                .layers()
                .iter()
                .map(|l| LayerGrads {
                    weight: Matrix::zeros(l.weight.rows(), l.weight.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    /// Flat views in the same order as [`MlpParams::param_slices_mut`].
    pub fn grad_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for layer in &self.layers {
            out.push(layer.weight.as_slice());
            out.push(layer.bias.as_slice());
        }
        out
    }
}

/// Intermediate values retained between a forward pass and its backward pass.
pub struct ForwardCache {
    /// Network input after the dropout mask (identical to the raw input when
    /// no mask was applied).
    input: Matrix,
    /// Dropout mask over the input, entries in {0, 1/(1-rate)}.
    mask: Option<Matrix>,
    /// Per-layer pre-activations.
    pre: Vec<Matrix>,
    /// Per-layer activation outputs; last entry is the network output.
    act: Vec<Matrix>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.act.last().expect("nonempty")
    }

    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre
    }

    pub fn activations(&self) -> &[Matrix] {
        &self.act
    }
}

/// Runs the network on a batch (rows are examples).
///
/// Dropout is applied to the input only, and only when `train_mode` is set;
/// in eval mode the pass is deterministic and `rng` is never touched.
pub fn mlp_forward(
    params: &MlpParams,
    input: &Matrix,
    dropout_rate: f64,
    rng: &mut impl Rng,
    train_mode: bool,
) -> Result<(Matrix, ForwardCache)> {
    if input.cols() != params.input_dim() {
        return Err(Error::shape(format!(
            "input has {} columns, network expects {}",
            input.cols(),
            params.input_dim()
        )));
    }
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(Error::validation(format!(
            "dropout rate {dropout_rate} outside [0, 1)"
        )));
    }
    input.ensure_finite("network input")?;

    let (dropped, mask) = if train_mode && dropout_rate > 0.0 {
        let keep_scale = 1.0 / (1.0 - dropout_rate);
        let mut mask = Matrix::zeros(input.rows(), input.cols());
        for v in mask.as_mut_slice() {
            *v = if rng.random::<f64>() < dropout_rate {
                0.0
            } else {
                keep_scale
            };
        }
        (input.hadamard(&mask)?, Some(mask))
    } else {
        (input.clone(), None)
    };

    let mut pre = Vec::with_capacity(params.num_layers());
    let mut act = Vec::with_capacity(params.num_layers());
    let mut current = dropped.clone();
    for layer in params.layers() {
        let z = current
            .matmul_bt(&layer.weight)?
            .add_row_vector(&layer.bias)?;
        let a = z.map(|v| layer.activation.apply(v));
        pre.push(z);
        act.push(a.clone());
        current = a;
    }
    let cache = ForwardCache {
        input: dropped,
        mask,
        pre,
        act,
    };
    Ok((current, cache))
}

/// Deterministic eval-mode forward pass (no dropout, no cache retained).
pub fn mlp_forward_eval(params: &MlpParams, input: &Matrix) -> Result<Matrix> {
    let (out, _) = mlp_forward_cached(params, input)?;
    Ok(out)
}

/// Forward pass without dropout that keeps the cache for a backward pass.
pub fn mlp_forward_cached(params: &MlpParams, input: &Matrix) -> Result<(Matrix, ForwardCache)> {
    let mut rng = NoDraws;
    mlp_forward(params, input, 0.0, &mut rng, false)
}

/// RNG stand-in for paths that must not consume randomness.
struct NoDraws;

impl rand::RngCore for NoDraws {
    fn next_u32(&mut self) -> u32 {
        unreachable!("eval-mode forward must not draw randomness")
    }

    fn next_u64(&mut self) -> u64 {
        unreachable!("eval-mode forward must not draw randomness")
    }

    fn fill_bytes(&mut self, _dest: &mut [u8]) {
        unreachable!("eval-mode forward must not draw randomness")
    }
}

/// Backpropagates `output_grad` through the cached pass.
///
/// Returns gradients for every parameter and the gradient with respect to the
/// raw (pre-dropout) input. The cache must come from a forward pass over the
/// same parameter shapes; anything else is a contract error.
pub fn mlp_backward(
    params: &MlpParams,
    cache: &ForwardCache,
    output_grad: &Matrix,
) -> Result<(MlpGrads, Matrix)> {
    if cache.act.len() != params.num_layers() || cache.pre.len() != params.num_layers() {
        return Err(Error::contract(format!(
            "cache has {} layers, parameters have {}",
            cache.act.len(),
            params.num_layers()
        )));
    }
    if cache.input.cols() != params.input_dim() {
        return Err(Error::contract(
            "cache input width does not match parameters".to_string(),
        ));
    }
    for (i, (layer, a)) in params.layers().iter().zip(&cache.act).enumerate() {
        if a.cols() != layer.weight.rows() || a.rows() != cache.input.rows() {
            return Err(Error::contract(format!(
                "cache activation {i} has shape {}x{}, expected {}x{}",
                a.rows(),
                a.cols(),
                cache.input.rows(),
                layer.weight.rows()
            )));
        }
    }
    if output_grad.shape() != cache.output().shape() {
        return Err(Error::contract(format!(
            "output grad is {}x{}, forward output was {}x{}",
            output_grad.rows(),
            output_grad.cols(),
            cache.output().rows(),
            cache.output().cols()
        )));
    }

    let n_layers = params.num_layers();
    let mut grads = Vec::with_capacity(n_layers);
    let mut upstream = output_grad.clone();
    for i in (0..n_layers).rev() {
        let layer = &params.layers()[i];
        let a = &cache.act[i];
        // dL/dz = dL/da * f'(z), with f' read off the stored output.
        let mut gz = upstream;
        for (g, &av) in gz.as_mut_slice().iter_mut().zip(a.as_slice()) {
            *g *= layer.activation.derivative_from_output(av);
        }
        let below = if i == 0 { &cache.input } else { &cache.act[i - 1] };
        let weight_grad = gz.matmul_at(below)?;
        let bias_grad = gz.col_sums();
        upstream = gz.matmul(&layer.weight)?;
        grads.push(LayerGrads {
            weight: weight_grad,
            bias: bias_grad,
        });
    }
    grads.reverse();

    let input_grad = match &cache.mask {
        Some(mask) => upstream.hadamard(mask)?,
        None => upstream,
    };
    Ok((MlpGrads { layers: grads }, input_grad))
}
