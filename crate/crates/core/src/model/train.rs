//! Minibatch training with early stopping on validation reconstruction.

use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::latent::diversity_noise;
use super::network::{sequence_loss, Cdn, LossBreakdown};
use super::ModelError;
use crate::data::{encode, CorpusSplit, EncodedSequence, Vocabulary};
use crate::exec::Executor;
use crate::tensor::{adam_step, AdamState, ParamGrads, Tape};

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean over the epoch's minibatches.
    pub train: LossBreakdown,
    /// Validation loss with `z = μ`; `total` equals `reconstruction`.
    pub validation: LossBreakdown,
    pub learning_rate: f32,
    /// KL weight at the epoch's last step.
    pub kl_weight: f32,
    pub improved: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Total minibatch loss after every optimizer step.
    pub step_losses: Vec<f32>,
    /// Validation reconstruction of the initial parameters.
    pub baseline_validation: f32,
    /// Epoch of the returned parameters; 0 if no epoch improved.
    pub best_epoch: usize,
    pub best_validation: f32,
    pub stopped_early: bool,
}

fn encode_all(set: &[alloc::string::String], vocab: &Vocabulary, max_len: usize) -> Result<Vec<EncodedSequence>, ModelError> {
    set.iter().map(|s| encode(s, vocab, max_len).map_err(ModelError::from)).collect()
}

/// Trains a fresh model on `split.train` and returns the parameters with
/// the best validation reconstruction error.
///
/// Noise is drawn with `D = 1`. The vocabulary covers all three sets.
pub fn train<E: Executor>(split: &CorpusSplit, config: ModelConfig, exec: &E) -> Result<(Cdn, TrainReport), ModelError> {
    train_with(split, config, exec, |_| {})
}

/// As [`train`], calling `on_epoch` after every epoch.
pub fn train_with<E, F>(split: &CorpusSplit, config: ModelConfig, exec: &E, mut on_epoch: F) -> Result<(Cdn, TrainReport), ModelError>
where
    E: Executor,
    F: FnMut(&EpochStats),
{
    if split.train.is_empty() || split.validation.is_empty() {
        return Err(ModelError::EmptySplit);
    }
    config.validate()?;
    let all: Vec<&str> = split.train.iter().chain(&split.validation).chain(&split.test).map(|s| s.as_str()).collect();
    let vocab = Vocabulary::build(&all);
    let train_set = encode_all(&split.train, &vocab, config.max_len)?;
    let val_set = encode_all(&split.validation, &vocab, config.max_len)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = Cdn::new(config.clone(), vocab, &mut rng)?;
    let mut adam = AdamState::new(&model.params);
    let steps_per_epoch = train_set.len().div_ceil(config.batch_size);
    let dz = config.latent_dim;

    let baseline = model.validation_loss(&val_set)?.reconstruction;
    let mut report = TrainReport { baseline_validation: baseline, best_validation: baseline, ..TrainReport::default() };
    let mut best = model.params.clone();
    let mut stale = 0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut step = 0;

    for epoch in 1..=config.max_epochs {
        let lr = config.learning_rate(epoch - 1);
        order.shuffle(&mut rng);
        let mut sum = LossBreakdown::default();
        let mut kl_weight = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            kl_weight = config.kl_weight(step, steps_per_epoch);
            let noise: Vec<Vec<f32>> = batch.iter().map(|_| diversity_noise(dz, 1.0, &mut rng)).collect();
            let m = &model;
            let results = exec.map(batch.len(), |i| -> Result<(ParamGrads, LossBreakdown), ModelError> {
                let mut tape = Tape::with_params(&m.params);
                let w = m.weights(&mut tape);
                let l = sequence_loss(&mut tape, &w, &train_set[batch[i]], Some(&noise[i]), kl_weight)?;
                let s = |v| tape.value(v).data()[0];
                let lb = LossBreakdown { reconstruction: s(l.reconstruction), kl: s(l.kl), total: s(l.total) };
                Ok((tape.backward(l.total).into_params(), lb))
            });
            let scale = 1.0 / batch.len() as f32;
            let mut batch_loss = LossBreakdown::default();
            model.params.zero_grad();
            for r in results {
                let (g, lb) = r?;
                model.params.accumulate(&g, scale);
                batch_loss.reconstruction += lb.reconstruction * scale;
                batch_loss.kl += lb.kl * scale;
                batch_loss.total += lb.total * scale;
            }
            if !batch_loss.total.is_finite() {
                return Err(ModelError::DivergedLoss { epoch, step: b });
            }
            if let Some(clip) = config.grad_clip {
                let norm = model.params.grad_norm();
                if norm > clip {
                    model.params.scale_grads(clip / norm);
                }
            }
            adam_step(&mut model.params, &mut adam, lr)?;
            report.step_losses.push(batch_loss.total);
            sum.reconstruction += batch_loss.reconstruction;
            sum.kl += batch_loss.kl;
            sum.total += batch_loss.total;
            step += 1;
        }
        let nb = steps_per_epoch as f32;
        let train = LossBreakdown { reconstruction: sum.reconstruction / nb, kl: sum.kl / nb, total: sum.total / nb };
        let validation = model.validation_loss(&val_set)?;
        if !validation.reconstruction.is_finite() {
            return Err(ModelError::DivergedLoss { epoch, step: steps_per_epoch });
        }
        let improved = validation.reconstruction < report.best_validation;
        if improved {
            report.best_validation = validation.reconstruction;
            report.best_epoch = epoch;
            best = model.params.clone();
            stale = 0;
        } else {
            stale += 1;
        }
        let stats = EpochStats { epoch, train, validation, learning_rate: lr, kl_weight, improved };
        on_epoch(&stats);
        report.epochs.push(stats);
        if stale >= config.early_stop_patience {
            report.stopped_early = true;
            break;
        }
    }
    model.params = best;
    Ok((model, report))
}
