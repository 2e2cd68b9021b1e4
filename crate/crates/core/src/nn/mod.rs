//! Convolutional classifier: tensors, layer kernels, the network container,
//! SGD training and binary checkpoints.

mod checkpoint;
pub mod gradcheck;
mod network;
pub mod ops;
mod tensor;
mod train;

pub use checkpoint::{decode, encode, load_checkpoint, save_checkpoint, Checkpoint, CheckpointError, RngState};
pub use network::{
    argmax, build_fser_network, fser_layer_kinds, Layer, LayerKind, Network, Params, Prediction, FSER_INPUT_SHAPE,
};
pub use ops::Mode;
pub use tensor::Tensor;
pub use train::{epoch_log_csv, evaluate, train, EpochLog, LabeledSet, TrainConfig, Trainer, EPOCH_LOG_HEADER};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("backward called without a forward pass: {0}")]
    MissingForwardCache(String),
    #[error("{0} split is empty")]
    EmptySplit(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
}
