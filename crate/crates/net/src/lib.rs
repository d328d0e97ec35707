//! A small feed-forward CNN engine (convolution, batch normalisation,
//! ReLU, dropout, dense and sigmoid layers with binary cross-entropy and
//! Adam), plus the dataset builders, training loop and decoders that turn
//! covariance matrices into direction-of-arrival estimates on a grid.

pub mod adam;
pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod layers;
pub mod network;
pub mod params;
pub mod predict;
pub mod spec;
pub mod tensor;
pub mod train;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMetadata};
pub use dataset::{
    build_fixed_k_dataset, build_mixed_k_dataset, fixed_k_count, load_dataset, mixed_k_count, read_dataset, save_dataset,
    write_dataset, Dataset, Example, KPolicy,
};
pub use error::{NetError, Result};
pub use layers::Mode;
pub use network::{backward, forward, forward_batch, loss_and_gradients, predict_batch};
pub use params::{BlockKind, LayerParams, ModelParams};
pub use predict::{predict_threshold, predict_topk, threshold_from_probs, topk_from_probs};
pub use spec::{LayerSpec, NetworkSpec, Shape};
pub use tensor::Tensor;
pub use train::{train, train_with_observer, TrainConfig, TrainingHistory};

/// Double-precision parameters, the precision used for training.
pub type Params64 = ModelParams<f64>;
pub type Tensor64 = Tensor<f64>;
