//! In-memory checkpoint: everything needed to rebuild a trained model.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::Cdn;
use super::ModelError;
use crate::data::Vocabulary;
use crate::tensor::Tensor;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epoch: usize,
    pub best_validation_loss: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub blocks: Vec<ParamBlock>,
    pub meta: TrainingMeta,
}

impl Checkpoint {
    pub fn from_model(model: &Cdn, meta: TrainingMeta) -> Checkpoint {
        let blocks = model
            .params
            .iter()
            .map(|p| ParamBlock { name: p.name.clone(), shape: p.value.shape().to_vec(), data: p.value.data().to_vec() })
            .collect();
        Checkpoint { format_version: FORMAT_VERSION, config: model.config.clone(), vocab: model.vocab.clone(), blocks, meta }
    }

    pub fn into_model(self) -> Result<Cdn, ModelError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ModelError::BadCheckpoint(alloc::format!("unsupported format version {}", self.format_version)));
        }
        let blocks = self.blocks.into_iter().map(|b| Tensor::new(&b.shape, b.data).map(|t| (b.name, t))).collect::<Result<Vec<_>, _>>()?;
        Cdn::from_blocks(self.config, self.vocab, blocks)
    }
}
