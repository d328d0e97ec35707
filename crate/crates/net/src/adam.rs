use doa_core::Real;

use crate::error::{shape_err, Result};
use crate::params::ModelParams;

/// Adam optimiser state with bias-corrected moments.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub first: Vec<Vec<T>>,
    pub second: Vec<Vec<T>>,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<T: Real> AdamState<T> {
    /// `beta1 = 0.9`, `beta2 = 0.999`, `epsilon = 1e-8`.
    pub fn new(params: &ModelParams<T>, lr: f64) -> Self {
        let zeros: Vec<Vec<T>> = params.trainable().iter().map(|b| vec![T::zero(); b.len()]).collect();
        Self {
            first: zeros.clone(),
            second: zeros,
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One Adam update of `params` using `grads` (shaped like `params`).
pub fn adam_step<T: Real>(state: &mut AdamState<T>, params: &mut ModelParams<T>, grads: &ModelParams<T>) -> Result<()> {
    let g = grads.trainable();
    let mut p = params.trainable_mut();
    if g.len() != p.len() || g.len() != state.first.len() {
        return shape_err("gradient blocks do not match the parameters");
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (T::lit(state.beta1), T::lit(state.beta2));
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    let lr = T::lit(state.lr);
    let eps = T::lit(state.epsilon);
    for (((pb, gb), mb), vb) in p.iter_mut().zip(&g).zip(&mut state.first).zip(&mut state.second) {
        if pb.len() != gb.len() {
            return shape_err("gradient block length mismatch");
        }
        for (((w, &gi), m), v) in pb.iter_mut().zip(gb.iter()).zip(mb.iter_mut()).zip(vb.iter_mut()) {
            *m = b1 * *m + (T::one() - b1) * gi;
            *v = b2 * *v + (T::one() - b2) * gi * gi;
            let mhat = *m / c1;
            let vhat = *v / c2;
            *w = *w - lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}
