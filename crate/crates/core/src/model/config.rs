//! Model and training hyperparameters.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub max_len: usize,
    pub embed_dim: usize,
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub latent_dim: usize,
    pub lstm_units: usize,
    pub batch_size: usize,
    pub initial_learning_rate: f32,
    pub lr_decay_rate: f32,
    /// KL weight at step 0.
    pub kl_start_weight: f32,
    /// KL weight once the ramp completes.
    pub kl_final_weight: f32,
    /// Length of the linear ramp in optimizer steps; `None` means 10% of
    /// `max_epochs` worth of steps.
    pub kl_ramp_steps: Option<usize>,
    pub early_stop_patience: usize,
    pub max_epochs: usize,
    /// Rescale gradients whose global L2 norm exceeds this.
    pub grad_clip: Option<f32>,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> ModelConfig {
        ModelConfig {
            max_len: 50,
            embed_dim: 128,
            filter_widths: vec![3, 4, 5, 6],
            filters_per_width: 128,
            latent_dim: 300,
            lstm_units: 150,
            batch_size: 64,
            initial_learning_rate: 0.001,
            lr_decay_rate: 0.95,
            kl_start_weight: 0.0,
            kl_final_weight: 1.0,
            kl_ramp_steps: None,
            early_stop_patience: 5,
            max_epochs: 100,
            grad_clip: None,
            seed: 0,
        }
    }
}

fn parse<T: core::str::FromStr>(key: &str, value: &str) -> Result<T, ModelError> {
    value.trim().parse().map_err(|_| ModelError::BadConfig(format!("{key}: cannot parse {value:?}")))
}

impl ModelConfig {
    /// The reduced dimensions used for desk-scale runs: embed 32, 16
    /// filters per width, latent 64, LSTM 64.
    pub fn reduced() -> ModelConfig {
        ModelConfig { embed_dim: 32, filters_per_width: 16, latent_dim: 64, lstm_units: 64, ..ModelConfig::default() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::BadConfig(m.to_string()));
        if self.max_len == 0
            || self.embed_dim == 0
            || self.filters_per_width == 0
            || self.latent_dim == 0
            || self.lstm_units == 0
            || self.batch_size == 0
        {
            return bad("all dimensions must be positive");
        }
        if self.filter_widths.is_empty() || self.filter_widths.iter().any(|&w| w == 0 || w > self.max_len + 2) {
            return bad("filter widths must be in 1..=max_len+2");
        }
        let mut w = self.filter_widths.clone();
        w.sort_unstable();
        w.dedup();
        if w.len() != self.filter_widths.len() {
            return bad("filter widths must be distinct");
        }
        if !(self.initial_learning_rate >= 0.0 && self.lr_decay_rate > 0.0) {
            return bad("learning rate must be non-negative and decay positive");
        }
        if !(self.kl_start_weight >= 0.0 && self.kl_final_weight >= 0.0) {
            return bad("KL weights must be non-negative");
        }
        if self.grad_clip.is_some_and(|c| c.is_nan() || c <= 0.0) {
            return bad("grad_clip must be positive");
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ModelError> {
        let v = value.trim();
        let opt = |v: &str| v.is_empty() || v == "none";
        match key.trim() {
            "max_len" => self.max_len = parse(key, v)?,
            "embed_dim" => self.embed_dim = parse(key, v)?,
            "filter_widths" => {
                self.filter_widths = v.split(',').map(|w| parse(key, w)).collect::<Result<_, _>>()?;
            }
            "filters_per_width" => self.filters_per_width = parse(key, v)?,
            "latent_dim" => self.latent_dim = parse(key, v)?,
            "lstm_units" => self.lstm_units = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "initial_learning_rate" => self.initial_learning_rate = parse(key, v)?,
            "lr_decay_rate" => self.lr_decay_rate = parse(key, v)?,
            "kl_start_weight" => self.kl_start_weight = parse(key, v)?,
            "kl_final_weight" => self.kl_final_weight = parse(key, v)?,
            "kl_ramp_steps" => self.kl_ramp_steps = if opt(v) { None } else { Some(parse(key, v)?) },
            "early_stop_patience" => self.early_stop_patience = parse(key, v)?,
            "max_epochs" => self.max_epochs = parse(key, v)?,
            "grad_clip" => self.grad_clip = if opt(v) { None } else { Some(parse(key, v)?) },
            "seed" => self.seed = parse(key, v)?,
            other => return Err(ModelError::BadConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Every field as `(key, value)` text, in declaration order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let widths: Vec<String> = self.filter_widths.iter().map(|w| w.to_string()).collect();
        let opt_usize = |o: Option<usize>| o.map_or("none".to_string(), |v| v.to_string());
        let opt_f32 = |o: Option<f32>| o.map_or("none".to_string(), |v| v.to_string());
        vec![
            ("max_len", self.max_len.to_string()),
            ("embed_dim", self.embed_dim.to_string()),
            ("filter_widths", widths.join(",")),
            ("filters_per_width", self.filters_per_width.to_string()),
            ("latent_dim", self.latent_dim.to_string()),
            ("lstm_units", self.lstm_units.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("initial_learning_rate", self.initial_learning_rate.to_string()),
            ("lr_decay_rate", self.lr_decay_rate.to_string()),
            ("kl_start_weight", self.kl_start_weight.to_string()),
            ("kl_final_weight", self.kl_final_weight.to_string()),
            ("kl_ramp_steps", opt_usize(self.kl_ramp_steps)),
            ("early_stop_patience", self.early_stop_patience.to_string()),
            ("max_epochs", self.max_epochs.to_string()),
            ("grad_clip", opt_f32(self.grad_clip)),
            ("seed", self.seed.to_string()),
        ]
    }

    /// Linear KL ramp from `kl_start_weight` to `kl_final_weight`.
    pub fn kl_weight(&self, step: usize, steps_per_epoch: usize) -> f32 {
        let ramp = self.kl_ramp_steps.unwrap_or((self.max_epochs * steps_per_epoch).div_ceil(10));
        if ramp == 0 {
            return self.kl_final_weight;
        }
        let frac = (step as f32 / ramp as f32).min(1.0);
        self.kl_start_weight + (self.kl_final_weight - self.kl_start_weight) * frac
    }

    pub fn learning_rate(&self, epoch: usize) -> f32 {
        self.initial_learning_rate * libm::powf(self.lr_decay_rate, epoch as f32)
    }

    /// Padded sequence length seen by the encoder.
    pub fn seq_len(&self) -> usize {
        self.max_len + 2
    }
}
