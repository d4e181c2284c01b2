//! The conditional diversity network.
//!
//! A convolutional encoder maps a SMILES string to a diagonal Gaussian
//! `N(μ, σ²)`. Generation draws `z = n ⊙ σ + μ` with `n ~ N(0, D)` and
//! decodes `z` with an LSTM, so the diversity parameter `D` widens the
//! neighbourhood explored around the prototype. Training uses `D = 1`.

mod checkpoint;
mod config;
mod generate;
mod latent;
mod network;
mod train;

use alloc::string::String;
use thiserror::Error;

use crate::data::DataError;
use crate::tensor::TensorError;

pub use checkpoint::{Checkpoint, ParamBlock, TrainingMeta, FORMAT_VERSION};
pub use config::ModelConfig;
pub use latent::{apply_noise, diverse_sample, diversity_noise, DecoderMode, DiversityConfig, LatentGaussian};
pub use network::{decoder, encoder, sequence_loss, Cdn, LossBreakdown, SequenceLoss, Weights, LOG_SIGMA_CLAMP};
pub use train::{train, train_with, EpochStats, TrainReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("sequence does not fit the model vocabulary or length")]
    VocabularyMismatch,
    #[error("training and validation sets must be non-empty")]
    EmptySplit,
    #[error("loss diverged in epoch {epoch}, batch {step}")]
    DivergedLoss { epoch: usize, step: usize },
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}
