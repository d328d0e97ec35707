//! Batched layer kernels. Spatial activations are `[batch, h, w, c]`,
//! flat ones `[batch, features]`.

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
mod loss;

pub use activation::{relu_backward, relu_forward, sigmoid, sigmoid_backward, sigmoid_forward};
pub use batchnorm::{batchnorm_backward, batchnorm_forward, BatchNormCache, BatchNormConfig, RunningStats};
pub use conv::{conv2d_backward, conv2d_forward, ConvGrads};
pub use dense::{dense_backward, dense_forward, DenseGrads};
pub use dropout::{dropout, dropout_backward, dropout_with_rng};
pub use loss::{bce_loss, bce_with_logits, PROB_CLAMP};

/// Whether layers use batch statistics and stochastic masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}
