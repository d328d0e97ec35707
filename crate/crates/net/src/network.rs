//! Forward and backward passes over a whole layer stack.

use doa_core::array::CovarianceInput;
use doa_core::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, NetError, Result};
use crate::layers::{
    batchnorm_backward, batchnorm_forward, bce_with_logits, conv2d_backward, conv2d_forward, dense_backward,
    dense_forward, dropout_backward, dropout_with_rng, relu_backward, relu_forward, sigmoid_backward,
    sigmoid_forward, BatchNormCache, BatchNormConfig, Mode, RunningStats,
};
use crate::params::{LayerParams, ModelParams};
use crate::spec::{LayerSpec, NetworkSpec};
use crate::tensor::Tensor;

enum Cache<T> {
    Input(Tensor<T>),
    BatchNorm(BatchNormCache<T>),
    Shape(Vec<usize>),
    Mask(Option<Vec<T>>),
    Output(Tensor<T>),
}

/// Activations kept for the backward pass.
pub struct ForwardPass<T> {
    caches: Vec<Cache<T>>,
    /// Input of the final layer (the logits when the stack ends in a sigmoid).
    pub logits: Tensor<T>,
    /// Output of the final layer.
    pub output: Tensor<T>,
    /// Batch statistics folded into the running averages, per layer.
    pub running: Vec<Option<RunningStats<T>>>,
}

/// Runs `input` (`[batch, N, N, 3]`) through the stack.
///
/// In training mode batch-norm layers use batch statistics and the updated
/// running averages are returned in [`ForwardPass::running`]; apply them
/// with [`apply_running_stats`].
pub fn forward_batch<T: Real, R: Rng + ?Sized>(
    spec: &NetworkSpec,
    params: &ModelParams<T>,
    input: &Tensor<T>,
    mode: Mode,
    rng: &mut R,
) -> Result<ForwardPass<T>> {
    let n = spec.input_size;
    if input.shape().len() != 4 || input.shape()[1..] != [n, n, 3] {
        return shape_err(format!("network expects [batch, {n}, {n}, 3], got {:?}", input.shape()));
    }
    if params.layers.len() != spec.layers.len() {
        return shape_err("parameters do not match the network spec");
    }
    let mut x = input.clone();
    let mut caches = Vec::with_capacity(spec.layers.len());
    let mut running = Vec::with_capacity(spec.layers.len());
    let mut logits = None;
    let last = spec.layers.len() - 1;
    for (idx, (layer, p)) in spec.layers.iter().zip(&params.layers).enumerate() {
        if idx == last {
            logits = Some(x.clone());
        }
        let mut stats_out = None;
        let (y, cache) = match (*layer, p) {
            (LayerSpec::Conv2d { kernel, stride, .. }, LayerParams::Conv { kernels, biases }) => {
                (conv2d_forward(&x, kernels, biases, kernel, stride)?, Cache::Input(x))
            }
            (LayerSpec::BatchNorm, LayerParams::BatchNorm { gain, shift, running }) => {
                let mut stats = running.clone();
                let (y, c) = batchnorm_forward(&x, gain, shift, mode, &mut stats, BatchNormConfig::default())?;
                if mode == Mode::Train {
                    stats_out = Some(stats);
                }
                (y, Cache::BatchNorm(c))
            }
            (LayerSpec::Relu, _) => (relu_forward(&x), Cache::Input(x)),
            (LayerSpec::Flatten, _) => {
                let shape = x.shape().to_vec();
                let b = x.batch();
                let per = x.len() / b.max(1);
                (x.reshape(vec![b, per])?, Cache::Shape(shape))
            }
            (LayerSpec::Dense { .. }, LayerParams::Dense { weights, biases }) => {
                (dense_forward(&x, weights, biases)?, Cache::Input(x))
            }
            (LayerSpec::Dropout { rate }, _) => {
                let (y, mask) = dropout_with_rng(&x, rate, mode, rng)?;
                (y, Cache::Mask(mask))
            }
            (LayerSpec::Sigmoid, _) => {
                let y = sigmoid_forward(&x);
                (y.clone(), Cache::Output(y))
            }
            _ => return shape_err(format!("layer {idx}: parameters do not match {layer:?}")),
        };
        caches.push(cache);
        running.push(stats_out);
        x = y;
    }
    Ok(ForwardPass {
        caches,
        logits: logits.unwrap_or_else(|| x.clone()),
        output: x,
        running,
    })
}

/// Copies the running statistics computed in a training forward pass into `params`.
pub fn apply_running_stats<T: Real>(params: &mut ModelParams<T>, pass: &ForwardPass<T>) {
    for (p, stats) in params.layers.iter_mut().zip(&pass.running) {
        if let (LayerParams::BatchNorm { running, .. }, Some(s)) = (p, stats) {
            *running = s.clone();
        }
    }
}

/// Back-propagates `upstream`, the gradient with respect to the output of
/// layer `top`, down to the input. Returns parameter gradients (running
/// statistics zero) and the gradient with respect to the network input.
pub fn backward<T: Real>(
    spec: &NetworkSpec,
    params: &ModelParams<T>,
    pass: &ForwardPass<T>,
    upstream: Tensor<T>,
    top: usize,
) -> Result<(ModelParams<T>, Tensor<T>)> {
    if top >= spec.layers.len() || pass.caches.len() != spec.layers.len() {
        return shape_err("backward pass does not match the forward pass");
    }
    let mut grads = params.zeros_like();
    let mut g = upstream;
    for idx in (0..=top).rev() {
        g = match (&spec.layers[idx], &params.layers[idx], &pass.caches[idx], &mut grads.layers[idx]) {
            (
                LayerSpec::Conv2d { filters, kernel, stride },
                LayerParams::Conv { kernels, .. },
                Cache::Input(x),
                LayerParams::Conv { kernels: dk, biases: db },
            ) => {
                let r = conv2d_backward(&g, x, kernels, *filters, *kernel, *stride)?;
                *dk = r.kernels;
                *db = r.biases;
                r.input
            }
            (
                LayerSpec::BatchNorm,
                LayerParams::BatchNorm { gain, .. },
                Cache::BatchNorm(c),
                LayerParams::BatchNorm { gain: dg, shift: ds, .. },
            ) => {
                let (dx, gg, gs) = batchnorm_backward(&g, c, gain)?;
                *dg = gg;
                *ds = gs;
                dx
            }
            (LayerSpec::Relu, _, Cache::Input(x), _) => relu_backward(&g, x)?,
            (LayerSpec::Flatten, _, Cache::Shape(s), _) => g.reshape(s.clone())?,
            (
                LayerSpec::Dense { .. },
                LayerParams::Dense { weights, .. },
                Cache::Input(x),
                LayerParams::Dense { weights: dw, biases: db },
            ) => {
                let r = dense_backward(&g, x, weights)?;
                *dw = r.weights;
                *db = r.biases;
                r.input
            }
            (LayerSpec::Dropout { .. }, _, Cache::Mask(m), _) => dropout_backward(&g, m.as_deref())?,
            (LayerSpec::Sigmoid, _, Cache::Output(y), _) => sigmoid_backward(&g, y)?,
            _ => return Err(NetError::Shape(format!("layer {idx}: inconsistent cache"))),
        };
    }
    Ok((grads, g))
}

/// Mean binary cross-entropy of a batch and the gradients of every
/// parameter. The stack must end in a sigmoid; the loss is taken on its
/// logits in fused form.
pub fn loss_and_gradients<T: Real, R: Rng + ?Sized>(
    spec: &NetworkSpec,
    params: &ModelParams<T>,
    input: &Tensor<T>,
    labels: &[T],
    mode: Mode,
    rng: &mut R,
) -> Result<(T, ModelParams<T>, ForwardPass<T>)> {
    let pass = forward_batch(spec, params, input, mode, rng)?;
    let b = input.batch();
    let width = pass.logits.len() / b.max(1);
    if labels.len() != pass.logits.len() {
        return shape_err(format!("{} label entries for {} outputs", labels.len(), pass.logits.len()));
    }
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(labels.len());
    let scale = T::one() / T::from_count(b);
    for (x, z) in pass.logits.values().chunks(width).zip(labels.chunks(width)) {
        let (l, g) = bce_with_logits(x, z)?;
        loss = loss + l;
        grad.extend(g.into_iter().map(|v| v * scale));
    }
    let upstream = Tensor::new(pass.logits.shape().to_vec(), grad)?;
    let top = spec.layers.len() - 2;
    let (grads, _) = backward(spec, params, &pass, upstream, top)?;
    Ok((loss * scale, grads, pass))
}

/// Stacks covariance inputs into a `[batch, N, N, 3]` tensor.
pub fn batch_tensor<T: Real>(inputs: &[&CovarianceInput]) -> Result<Tensor<T>> {
    let n = inputs.first().map_or(0, |x| x.size());
    let mut vals = Vec::with_capacity(inputs.len() * n * n * 3);
    for x in inputs {
        if x.size() != n {
            return shape_err("inputs of different sizes in one batch");
        }
        vals.extend(x.values().iter().map(|&v| T::lit(v)));
    }
    Tensor::new(vec![inputs.len(), n, n, 3], vals)
}

/// Evaluation-mode output probabilities for one input.
pub fn forward<T: Real>(spec: &NetworkSpec, params: &ModelParams<T>, input: &CovarianceInput) -> Result<Vec<T>> {
    Ok(predict_batch(spec, params, &[input])?.pop().unwrap_or_default())
}

/// Evaluation-mode output probabilities, one vector per input.
pub fn predict_batch<T: Real>(
    spec: &NetworkSpec,
    params: &ModelParams<T>,
    inputs: &[&CovarianceInput],
) -> Result<Vec<Vec<T>>> {
    if inputs.is_empty() {
        return Ok(Vec::new());
    }
    let x = batch_tensor(inputs)?;
    // Evaluation mode never draws from the generator.
    let pass = forward_batch(spec, params, &x, Mode::Eval, &mut ChaCha8Rng::seed_from_u64(0))?;
    let width = pass.output.len() / inputs.len();
    Ok(pass.output.values().chunks(width).map(<[T]>::to_vec).collect())
}
