//! Parameters and the differentiable forward pass.
//!
//! Encoder: shared embedding, a bank of max-pooled convolutions over the
//! padded sequence, ReLU, then two dense heads for `μ` and `log σ`
//! (clamped to `[-8, 8]`). A dense bridge maps `z` to the decoder's
//! initial `(h, c)`; `z` enters the decoder only there. The LSTM decoder
//! reads the gold previous token and a dense layer produces logits.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;

use super::config::ModelConfig;
use super::latent::LatentGaussian;
use super::ModelError;
use crate::data::{EncodedSequence, Vocabulary};
use crate::tensor::{init, ParamId, ParamStore, Tape, Tensor, TensorError, Var};

pub const LOG_SIGMA_CLAMP: f32 = 8.0;

/// Reconstruction, KL and their weighted sum for one sequence or a batch mean.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    /// Mean cross-entropy per scored token.
    pub reconstruction: f32,
    pub kl: f32,
    pub total: f32,
}

#[derive(Debug, Clone, Copy)]
enum Init {
    Embedding,
    Conv,
    Xavier,
    Zero,
}

/// Names and shapes of every parameter, in registration order.
fn layout(cfg: &ModelConfig, vocab: usize) -> Vec<(String, Vec<usize>, Init)> {
    let (e, f, dz, u) = (cfg.embed_dim, cfg.filters_per_width, cfg.latent_dim, cfg.lstm_units);
    let feat = f * cfg.filter_widths.len();
    let mut v = alloc::vec![(String::from("embedding"), alloc::vec![vocab, e], Init::Embedding)];
    for &w in &cfg.filter_widths {
        v.push((format!("conv.w{w}"), alloc::vec![w * e, f], Init::Conv));
        v.push((format!("conv.b{w}"), alloc::vec![f], Init::Zero));
    }
    v.push(("enc.mu.w".into(), alloc::vec![feat, dz], Init::Xavier));
    v.push(("enc.mu.b".into(), alloc::vec![dz], Init::Zero));
    v.push(("enc.log_sigma.w".into(), alloc::vec![feat, dz], Init::Xavier));
    v.push(("enc.log_sigma.b".into(), alloc::vec![dz], Init::Zero));
    v.push(("bridge.w".into(), alloc::vec![dz, 2 * u], Init::Xavier));
    v.push(("bridge.b".into(), alloc::vec![2 * u], Init::Zero));
    v.push(("lstm.w".into(), alloc::vec![e + u, 4 * u], Init::Xavier));
    v.push(("lstm.b".into(), alloc::vec![4 * u], Init::Zero));
    v.push(("out.w".into(), alloc::vec![u, vocab], Init::Xavier));
    v.push(("out.b".into(), alloc::vec![vocab], Init::Zero));
    v
}

#[derive(Debug, Clone, PartialEq)]
struct ParamIds {
    embedding: ParamId,
    conv: Vec<(ParamId, ParamId)>,
    mu: (ParamId, ParamId),
    log_sigma: (ParamId, ParamId),
    bridge: (ParamId, ParamId),
    lstm: (ParamId, ParamId),
    out: (ParamId, ParamId),
}

impl ParamIds {
    /// Ids follow [`layout`] order.
    fn new(n_widths: usize) -> ParamIds {
        let id = ParamId;
        let conv = (0..n_widths).map(|i| (id(1 + 2 * i), id(2 + 2 * i))).collect();
        let b = 1 + 2 * n_widths;
        ParamIds {
            embedding: id(0),
            conv,
            mu: (id(b), id(b + 1)),
            log_sigma: (id(b + 2), id(b + 3)),
            bridge: (id(b + 4), id(b + 5)),
            lstm: (id(b + 6), id(b + 7)),
            out: (id(b + 8), id(b + 9)),
        }
    }
}

/// Tape handles for every weight. Built from parameters for training, or
/// from plain inputs for gradient checking.
#[derive(Debug, Clone)]
pub struct Weights {
    pub embedding: Var,
    pub conv: Vec<(Var, Var)>,
    pub mu: (Var, Var),
    pub log_sigma: (Var, Var),
    pub bridge: (Var, Var),
    pub lstm: (Var, Var),
    pub out: (Var, Var),
}

impl Weights {
    /// Rebuilds the handle set from a flat list in parameter order.
    pub fn from_vars(v: &[Var], n_widths: usize) -> Weights {
        let b = 1 + 2 * n_widths;
        Weights {
            embedding: v[0],
            conv: (0..n_widths).map(|i| (v[1 + 2 * i], v[2 + 2 * i])).collect(),
            mu: (v[b], v[b + 1]),
            log_sigma: (v[b + 2], v[b + 3]),
            bridge: (v[b + 4], v[b + 5]),
            lstm: (v[b + 6], v[b + 7]),
            out: (v[b + 8], v[b + 9]),
        }
    }
}

/// Encoder on the full padded sequence. Returns `(μ, log σ)`.
pub fn encoder(tape: &mut Tape<'_>, w: &Weights, indices: &[usize]) -> Result<(Var, Var), TensorError> {
    let emb = tape.embedding_lookup(w.embedding, indices)?;
    let pooled = tape.conv1d_bank(emb, &w.conv)?;
    let feat = tape.relu(pooled);
    let mu = tape.dense(feat, w.mu.0, w.mu.1)?;
    let raw = tape.dense(feat, w.log_sigma.0, w.log_sigma.1)?;
    let log_sigma = tape.clamp(raw, -LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP);
    Ok((mu, log_sigma))
}

/// Teacher-forced decoder. Returns the `[T×V]` logits and the summed
/// cross-entropy against `targets`.
pub fn decoder(tape: &mut Tape<'_>, w: &Weights, z: Var, inputs: &[usize], targets: &[usize]) -> Result<(Var, Var), TensorError> {
    let hc = tape.dense(z, w.bridge.0, w.bridge.1)?;
    let u = tape.value(hc).len() / 2;
    let mut h = tape.slice(hc, 0, u)?;
    let mut c = tape.slice(hc, u, u)?;
    let emb = tape.embedding_lookup(w.embedding, inputs)?;
    let e = tape.value(emb).as_matrix().1;
    let mut hs = Vec::with_capacity(inputs.len());
    for t in 0..inputs.len() {
        let x = tape.slice(emb, t * e, e)?;
        (h, c) = tape.lstm_cell_step(x, h, c, w.lstm.0, w.lstm.1)?;
        hs.push(h);
    }
    let hmat = tape.stack(&hs)?;
    let logits = tape.dense(hmat, w.out.0, w.out.1)?;
    let ce = tape.softmax_cross_entropy(logits, targets)?;
    Ok((logits, ce))
}

/// Loss graph for one sequence.
pub struct SequenceLoss {
    pub logits: Var,
    pub reconstruction: Var,
    pub kl: Var,
    pub total: Var,
}

/// Encode, sample `z = noise ⊙ σ + μ` (or `z = μ` without noise), decode.
pub fn sequence_loss(
    tape: &mut Tape<'_>,
    w: &Weights,
    seq: &EncodedSequence,
    noise: Option<&[f32]>,
    kl_weight: f32,
) -> Result<SequenceLoss, TensorError> {
    let (mu, log_sigma) = encoder(tape, w, &seq.indices)?;
    let z = match noise {
        Some(n) => {
            let sigma = tape.exp(log_sigma);
            let n = tape.constant(Tensor::vector(n.to_vec()));
            let spread = tape.mul(n, sigma)?;
            tape.add(spread, mu)?
        }
        None => mu,
    };
    let (logits, ce) = decoder(tape, w, z, seq.inputs(), seq.targets())?;
    let reconstruction = tape.scale(ce, 1.0 / seq.targets().len() as f32);
    let kl = tape.kl_gaussian_to_standard(mu, log_sigma)?;
    let weighted = tape.scale(kl, kl_weight);
    let total = tape.add(reconstruction, weighted)?;
    Ok(SequenceLoss { logits, reconstruction, kl, total })
}

pub(crate) struct DecoderTensors<'a> {
    pub embedding: &'a [f32],
    pub bridge: (&'a [f32], &'a [f32]),
    pub lstm: (&'a [f32], &'a [f32]),
    pub out: (&'a [f32], &'a [f32]),
    pub embed_dim: usize,
    pub latent_dim: usize,
    pub units: usize,
    pub vocab: usize,
}

/// The conditional diversity network: configuration, vocabulary and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdn {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub params: ParamStore,
    ids: ParamIds,
}

impl Cdn {
    /// Freshly initialized model: embeddings `U(-0.1, 0.1)`, convolutions
    /// truncated normal (std 0.1), other weights Xavier uniform, biases 0.
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, vocab: Vocabulary, rng: &mut R) -> Result<Cdn, ModelError> {
        config.validate()?;
        let mut params = ParamStore::new();
        for (name, shape, kind) in layout(&config, vocab.len()) {
            let t = match kind {
                Init::Embedding => init::uniform(&shape, -0.1, 0.1, rng),
                Init::Conv => init::truncated_normal(&shape, 0.1, rng),
                Init::Xavier => init::xavier_uniform(shape[0], shape[1], rng),
                Init::Zero => Tensor::zeros(&shape),
            };
            params.add(name, t);
        }
        let ids = ParamIds::new(config.filter_widths.len());
        Ok(Cdn { config, vocab, params, ids })
    }

    /// Rebuilds a model from named blocks, checking names and shapes.
    pub fn from_blocks(config: ModelConfig, vocab: Vocabulary, blocks: Vec<(String, Tensor)>) -> Result<Cdn, ModelError> {
        config.validate()?;
        let expect = layout(&config, vocab.len());
        if expect.len() != blocks.len() {
            return Err(ModelError::BadCheckpoint(format!("expected {} blocks, found {}", expect.len(), blocks.len())));
        }
        let mut params = ParamStore::new();
        for ((name, shape, _), (bn, t)) in expect.into_iter().zip(blocks) {
            if name != bn || shape != t.shape() {
                return Err(ModelError::BadCheckpoint(format!("block {bn} {:?} where {name} {shape:?} was expected", t.shape())));
            }
            params.add(name, t);
        }
        let ids = ParamIds::new(config.filter_widths.len());
        Ok(Cdn { config, vocab, params, ids })
    }

    /// Names and shapes of every parameter block, in order.
    pub fn layout(config: &ModelConfig, vocab: usize) -> Vec<(String, Vec<usize>)> {
        layout(config, vocab).into_iter().map(|(n, s, _)| (n, s)).collect()
    }

    pub fn weights(&self, tape: &mut Tape<'_>) -> Weights {
        let p = |tape: &mut Tape<'_>, id| tape.param(id);
        let pair = |tape: &mut Tape<'_>, (a, b): (ParamId, ParamId)| (tape.param(a), tape.param(b));
        Weights {
            embedding: p(tape, self.ids.embedding),
            conv: self.ids.conv.iter().map(|&ab| pair(tape, ab)).collect(),
            mu: pair(tape, self.ids.mu),
            log_sigma: pair(tape, self.ids.log_sigma),
            bridge: pair(tape, self.ids.bridge),
            lstm: pair(tape, self.ids.lstm),
            out: pair(tape, self.ids.out),
        }
    }

    /// Raw decoder tensors for tape-free inference.
    pub(crate) fn decoder_tensors(&self) -> DecoderTensors<'_> {
        let v = |id| self.params.value(id).data();
        DecoderTensors {
            embedding: v(self.ids.embedding),
            bridge: (v(self.ids.bridge.0), v(self.ids.bridge.1)),
            lstm: (v(self.ids.lstm.0), v(self.ids.lstm.1)),
            out: (v(self.ids.out.0), v(self.ids.out.1)),
            embed_dim: self.config.embed_dim,
            latent_dim: self.config.latent_dim,
            units: self.config.lstm_units,
            vocab: self.vocab.len(),
        }
    }

    fn check_sequence(&self, seq: &EncodedSequence) -> Result<(), ModelError> {
        if seq.indices.len() != self.config.seq_len() || seq.indices.iter().any(|&i| i >= self.vocab.len()) {
            return Err(ModelError::VocabularyMismatch);
        }
        Ok(())
    }

    /// Posterior parameters for one encoded molecule.
    pub fn encode(&self, seq: &EncodedSequence) -> Result<LatentGaussian, ModelError> {
        self.check_sequence(seq)?;
        let mut tape = Tape::with_params(&self.params);
        let w = self.weights(&mut tape);
        let (mu, ls) = encoder(&mut tape, &w, &seq.indices)?;
        Ok(LatentGaussian { mu: tape.value(mu).data().to_vec(), log_sigma: tape.value(ls).data().to_vec() })
    }

    /// Encodes a SMILES string with the model vocabulary.
    pub fn encode_smiles(&self, s: &str) -> Result<(EncodedSequence, LatentGaussian), ModelError> {
        let seq = crate::data::encode(s, &self.vocab, self.config.max_len)?;
        let g = self.encode(&seq)?;
        Ok((seq, g))
    }

    /// Teacher-forced logits (`true_length + 1` rows) and mean cross-entropy
    /// per token for a given `z`.
    pub fn decode_teacher_forced(&self, z: &[f32], target: &EncodedSequence) -> Result<(Tensor, f32), ModelError> {
        self.check_sequence(target)?;
        if z.len() != self.config.latent_dim {
            return Err(TensorError::ShapeMismatch { op: "decode_teacher_forced", detail: format!("z has {} entries", z.len()) }.into());
        }
        let mut tape = Tape::with_params(&self.params);
        let w = self.weights(&mut tape);
        let zv = tape.constant(Tensor::vector(z.to_vec()));
        let (logits, ce) = decoder(&mut tape, &w, zv, target.inputs(), target.targets())?;
        let rec = tape.value(ce).data()[0] / target.targets().len() as f32;
        Ok((tape.value(logits).clone(), rec))
    }

    /// Teacher-forced logits and loss for one sequence, with `z` sampled
    /// from the given noise or set to `μ` without it.
    pub fn teacher_forced(
        &self,
        seq: &EncodedSequence,
        noise: Option<&[f32]>,
        kl_weight: f32,
    ) -> Result<(Tensor, LossBreakdown), ModelError> {
        self.check_sequence(seq)?;
        let mut tape = Tape::with_params(&self.params);
        let w = self.weights(&mut tape);
        let l = sequence_loss(&mut tape, &w, seq, noise, kl_weight)?;
        let s = |v| tape.value(v).data()[0];
        let b = LossBreakdown { reconstruction: s(l.reconstruction), kl: s(l.kl), total: s(l.total) };
        Ok((tape.value(l.logits).clone(), b))
    }

    /// Full loss for one sequence. Without noise `z = μ`.
    pub fn loss(&self, seq: &EncodedSequence, noise: Option<&[f32]>, kl_weight: f32) -> Result<LossBreakdown, ModelError> {
        Ok(self.teacher_forced(seq, noise, kl_weight)?.1)
    }

    /// Mean reconstruction and KL over `seqs` with `z = μ`.
    pub fn validation_loss(&self, seqs: &[EncodedSequence]) -> Result<LossBreakdown, ModelError> {
        let mut acc = LossBreakdown::default();
        for s in seqs {
            let l = self.loss(s, None, 0.0)?;
            acc.reconstruction += l.reconstruction;
            acc.kl += l.kl;
        }
        let n = seqs.len().max(1) as f32;
        acc.reconstruction /= n;
        acc.kl /= n;
        acc.total = acc.reconstruction;
        Ok(acc)
    }
}
