//! Autoencoders for multivariate ICU timeseries.
//!
//! Fixed-length dense autoencoders and a sequence-to-sequence LSTM
//! autoencoder, trained to reconstruct hourly windows of 30 physiological
//! channels, together with the preprocessing pipeline that turns raw
//! timestamped measurements into normalized, zero-padded windows.

pub mod activation;
pub mod checkpoint;
pub mod data;
pub mod dense;
pub mod error;
pub mod gradcheck;
pub mod loss;
pub mod lstm;
pub mod model;
pub mod optim;
pub mod seq;
pub mod tensor;
pub mod train;

/// Physiological channels per hour.
pub const NUM_FEATURES: usize = 30;

pub use activation::{activation_derivative, apply_activation, ActivationKind};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Architecture, CheckpointHeader, CheckpointMeta,
};
pub use dense::{
    dense_backward, dense_embed, dense_forward, embedding_dim, DenseAutoencoder, DenseCache,
    DenseLayer,
};
pub use error::{Error, Result};
pub use gradcheck::grad_check;
pub use loss::mse;
pub use lstm::{lstm_step, Gate, LstmCellParams};
pub use model::{build_model, AnyModel, Autoencoder, Grads, ModelKind, SeqBatch};
pub use optim::{adam_update, clip_global_norm, sgd_update, OptimizerKind, OptimizerState};
pub use seq::{decode, encode, seq_forward_backward, SeqAutoencoder};
pub use tensor::Tensor2D;
pub use train::{
    early_stop_check, evaluate, minibatch_iter, train, EpochRecord, StopDecision, TrainConfig,
    TrainHistory,
};
