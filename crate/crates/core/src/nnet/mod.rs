//! Convolutional steering regressor: tensors, layers, backpropagation,
//! Adam, training loop and model files.

mod adam;
mod forward;
mod model;
mod ops;
mod params;
mod spec;
mod tensor;
mod train;

pub use adam::Adam;
pub use forward::{backward, forward, mse_grad, mse_loss, Cache, Mode};
pub use model::{Model, MODEL_VERSION};
pub use ops::{conv_forward, fc_forward};
pub use params::{glorot_limit, glorot_uniform_init, LayerParams, NetParams};
pub use spec::{conv_output_dim, param_count, ConvSpec, FcSpec, InputShape, LayerShape, NetSpec};
pub use tensor::Tensor;
pub use train::{evaluate, train, train_from, EpochStats, TrainConfig, TrainOutcome};

use thiserror::Error;

use crate::dataset::DatasetError;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid network spec: {0}")]
    Spec(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("model file checksum mismatch")]
    Checksum,
    #[error("model file version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("model file: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Data(#[from] DatasetError),
}
