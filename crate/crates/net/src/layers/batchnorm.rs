use doa_core::Real;

use super::Mode;
use crate::error::{domain_err, shape_err, Result};
use crate::tensor::Tensor;

/// Numerical constants of batch normalisation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchNormConfig {
    pub epsilon: f64,
    /// Weight of the current batch in the running averages.
    pub momentum: f64,
}

impl Default for BatchNormConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            momentum: 0.1,
        }
    }
}

/// Per-channel running mean and variance used in evaluation mode.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

impl<T: Real> RunningStats<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            mean: vec![T::zero(); channels],
            var: vec![T::one(); channels],
        }
    }
}

/// What the backward pass needs from the forward pass.
#[derive(Clone, Debug)]
pub struct BatchNormCache<T> {
    normalized: Vec<T>,
    inv_std: Vec<T>,
    mode: Mode,
}

/// Normalises every channel (the trailing axis) over all other axes.
///
/// In training mode batch statistics are used and `stats` is updated;
/// in evaluation mode `stats` is used as is.
pub fn batchnorm_forward<T: Real>(
    input: &Tensor<T>,
    gain: &[T],
    shift: &[T],
    mode: Mode,
    stats: &mut RunningStats<T>,
    cfg: BatchNormConfig,
) -> Result<(Tensor<T>, BatchNormCache<T>)> {
    let c = *input.shape().last().unwrap_or(&0);
    if c == 0 || gain.len() != c || shift.len() != c || stats.mean.len() != c || stats.var.len() != c {
        return shape_err(format!(
            "batch norm over {c} channels with {} gains, {} shifts",
            gain.len(),
            shift.len()
        ));
    }
    let x = input.values();
    let m = x.len() / c;
    let eps = T::lit(cfg.epsilon);
    let (mean, var) = match mode {
        Mode::Train => {
            if input.batch() < 2 {
                return domain_err("batch normalisation in training mode needs at least two examples");
            }
            let mut mean = vec![T::zero(); c];
            for row in x.chunks_exact(c) {
                for (acc, &v) in mean.iter_mut().zip(row) {
                    *acc = *acc + v;
                }
            }
            let mf = T::from_count(m);
            mean.iter_mut().for_each(|v| *v = *v / mf);
            let mut var = vec![T::zero(); c];
            for row in x.chunks_exact(c) {
                for ((acc, &v), &mu) in var.iter_mut().zip(row).zip(&mean) {
                    *acc = *acc + (v - mu) * (v - mu);
                }
            }
            var.iter_mut().for_each(|v| *v = *v / mf);

            let mom = T::lit(cfg.momentum);
            let unbias = mf / (mf - T::one());
            for ch in 0..c {
                stats.mean[ch] = (T::one() - mom) * stats.mean[ch] + mom * mean[ch];
                stats.var[ch] = (T::one() - mom) * stats.var[ch] + mom * var[ch] * unbias;
            }
            (mean, var)
        }
        Mode::Eval => (stats.mean.clone(), stats.var.clone()),
    };
    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    let mut normalized = Vec::with_capacity(x.len());
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks_exact(c) {
        for ch in 0..c {
            let xh = (row[ch] - mean[ch]) * inv_std[ch];
            normalized.push(xh);
            out.push(gain[ch] * xh + shift[ch]);
        }
    }
    Ok((
        Tensor::new(input.shape().to_vec(), out)?,
        BatchNormCache { normalized, inv_std, mode },
    ))
}

/// Returns `(input_grad, gain_grad, shift_grad)`.
pub fn batchnorm_backward<T: Real>(
    upstream: &Tensor<T>,
    cache: &BatchNormCache<T>,
    gain: &[T],
) -> Result<(Tensor<T>, Vec<T>, Vec<T>)> {
    let c = gain.len();
    let g = upstream.values();
    if g.len() != cache.normalized.len() || c == 0 || g.len() % c != 0 {
        return shape_err("upstream gradient does not match the batch norm input");
    }
    let m = g.len() / c;
    let mut dgain = vec![T::zero(); c];
    let mut dshift = vec![T::zero(); c];
    for (grow, xrow) in g.chunks_exact(c).zip(cache.normalized.chunks_exact(c)) {
        for ch in 0..c {
            dgain[ch] = dgain[ch] + grow[ch] * xrow[ch];
            dshift[ch] = dshift[ch] + grow[ch];
        }
    }
    let mut dx = Vec::with_capacity(g.len());
    match cache.mode {
        Mode::Train => {
            // dx = inv_std/m * (m*dxh - sum(dxh) - xh*sum(dxh*xh)), dxh = g*gain
            let mf = T::from_count(m);
            for (grow, xrow) in g.chunks_exact(c).zip(cache.normalized.chunks_exact(c)) {
                for ch in 0..c {
                    let sum_dxh = dshift[ch] * gain[ch];
                    let sum_dxh_xh = dgain[ch] * gain[ch];
                    let dxh = grow[ch] * gain[ch];
                    dx.push(cache.inv_std[ch] / mf * (mf * dxh - sum_dxh - xrow[ch] * sum_dxh_xh));
                }
            }
        }
        Mode::Eval => {
            for grow in g.chunks_exact(c) {
                for ch in 0..c {
                    dx.push(grow[ch] * gain[ch] * cache.inv_std[ch]);
                }
            }
        }
    }
    Ok((Tensor::new(upstream.shape().to_vec(), dx)?, dgain, dshift))
}
