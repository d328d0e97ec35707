//! Mini-batch Adam training with a step-halving learning rate.

use doa_core::Real;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::{adam_step, AdamState};
use crate::dataset::{Dataset, Example};
use crate::error::{domain_err, NetError, Result};
use crate::layers::{bce_with_logits, Mode};
use crate::network::{apply_running_stats, batch_tensor, forward_batch, loss_and_gradients};
use crate::params::ModelParams;
use crate::spec::NetworkSpec;

const SPLIT_SALT: u64 = 0x5eed_5917;
const EVAL_BATCH: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    /// The learning rate halves every this many epochs.
    pub lr_halving_period: usize,
    pub validation_fraction: f64,
    /// Seeds initialisation, the split, shuffling and dropout.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            epochs: 200,
            initial_lr: 1e-3,
            lr_halving_period: 10,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Mixed source-count training halves the rate more slowly.
    pub fn mixed_k() -> Self {
        Self {
            lr_halving_period: 20,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return domain_err("batch size must be at least 2 (batch normalisation)");
        }
        if self.epochs == 0 || self.lr_halving_period == 0 {
            return domain_err("epochs and halving period must be positive");
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return domain_err(format!("learning rate must be positive, got {}", self.initial_lr));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return domain_err(format!(
                "validation fraction must lie in [0, 1), got {}",
                self.validation_fraction
            ));
        }
        Ok(())
    }

    /// Learning rate during zero-based `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.initial_lr * 0.5f64.powi((epoch / self.lr_halving_period) as i32)
    }
}

/// Per-epoch record. `validation_loss` is empty when no examples are held out.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub learning_rate: Vec<f64>,
}

/// Deterministic disjoint train / validation split of `0..len`.
pub fn split_indices(len: usize, validation_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ SPLIT_SALT));
    let n_val = ((len as f64) * validation_fraction).round() as usize;
    let n_val = n_val.min(len.saturating_sub(2));
    let mut val = idx[..n_val].to_vec();
    let mut train = idx[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    (train, val)
}

/// Splits a shuffled index list into batches; a trailing batch of one is
/// folded into its predecessor so batch statistics stay defined.
pub fn batches(order: &[usize], batch_size: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = order.chunks(batch_size).map(<[usize]>::to_vec).collect();
    if out.len() >= 2 && out.last().is_some_and(|b| b.len() == 1) {
        let tail = out.pop().expect("non-empty");
        out.last_mut().expect("non-empty").extend(tail);
    }
    out
}

fn labels<T: Real>(examples: &[&Example]) -> Vec<T> {
    examples
        .iter()
        .flat_map(|e| e.label.bits().iter().map(|&b| T::from_count(b as usize)))
        .collect()
}

/// Mean (per example) binary cross-entropy in evaluation mode.
pub fn evaluate_loss<T: Real>(spec: &NetworkSpec, params: &ModelParams<T>, examples: &[&Example]) -> Result<f64> {
    if examples.is_empty() {
        return domain_err("no examples to evaluate");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut total = 0.0;
    for chunk in examples.chunks(EVAL_BATCH) {
        let inputs: Vec<_> = chunk.iter().map(|e| &e.input).collect();
        let pass = forward_batch(spec, params, &batch_tensor(&inputs)?, Mode::Eval, &mut rng)?;
        let (loss, _) = bce_with_logits(pass.logits.values(), &labels::<T>(chunk))?;
        total += loss.to_f64().unwrap_or(f64::NAN);
    }
    Ok(total / examples.len() as f64)
}

/// Trains freshly initialised parameters.
pub fn train<T: Real>(
    spec: &NetworkSpec,
    data: &Dataset,
    config: &TrainConfig,
) -> Result<(ModelParams<T>, TrainingHistory)> {
    train_with_observer(spec, data, config, |_, _| {})
}

/// As [`train`], calling `observer(epoch, history)` after every epoch.
pub fn train_with_observer<T: Real>(
    spec: &NetworkSpec,
    data: &Dataset,
    config: &TrainConfig,
    mut observer: impl FnMut(usize, &TrainingHistory),
) -> Result<(ModelParams<T>, TrainingHistory)> {
    config.validate()?;
    spec.validate()?;
    if data.examples.iter().any(|e| e.input.size() != spec.input_size) {
        return domain_err(format!("dataset inputs are not {0}x{0}", spec.input_size));
    }
    let width = spec.output_len()?;
    if data.examples.iter().any(|e| e.label.len() != width) {
        return domain_err("dataset labels do not match the network output width");
    }
    let (train_idx, val_idx) = split_indices(data.len(), config.validation_fraction, config.seed);
    if train_idx.len() < 2 {
        return domain_err("at least two training examples are required");
    }
    let val: Vec<&Example> = val_idx.iter().map(|&i| &data.examples[i]).collect();

    let mut params = ModelParams::<T>::init(spec, config.seed)?;
    let mut adam = AdamState::new(&params, config.initial_lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order = train_idx;
    let mut history = TrainingHistory::default();

    for epoch in 0..config.epochs {
        adam.lr = config.lr_at(epoch);
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for batch in batches(&order, config.batch_size) {
            let examples: Vec<&Example> = batch.iter().map(|&i| &data.examples[i]).collect();
            let inputs: Vec<_> = examples.iter().map(|e| &e.input).collect();
            let x = batch_tensor(&inputs)?;
            let (loss, grads, pass) = loss_and_gradients(spec, &params, &x, &labels::<T>(&examples), Mode::Train, &mut rng)?;
            let loss = loss.to_f64().unwrap_or(f64::NAN);
            if !loss.is_finite() {
                return Err(NetError::Diverged(format!("loss {loss} in epoch {epoch}")));
            }
            adam_step(&mut adam, &mut params, &grads)?;
            apply_running_stats(&mut params, &pass);
            sum += loss * batch.len() as f64;
        }
        history.train_loss.push(sum / order.len() as f64);
        history.learning_rate.push(adam.lr);
        if !val.is_empty() {
            let v = evaluate_loss(spec, &params, &val)?;
            if !v.is_finite() {
                return Err(NetError::Diverged(format!("validation loss {v} in epoch {epoch}")));
            }
            history.validation_loss.push(v);
        }
        observer(epoch, &history);
    }
    Ok((params, history))
}
