//! Tape-free decoding.
//!
//! Candidates are decoded as a batch: every step is one matrix product over
//! the rows that have not emitted END yet. Each row's arithmetic is
//! independent of the others, so a candidate decodes to the same string
//! whether it runs alone or in a batch.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::latent::{apply_noise, diversity_noise, DecoderMode, DiversityConfig, LatentGaussian};
use super::network::Cdn;
use super::ModelError;
use crate::data::{END, START};
use crate::exec::Executor;
use crate::tensor::kernels;

fn sample_index<R: Rng + ?Sized>(probs: &[f32], rng: &mut R) -> usize {
    let u: f32 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave the total just under 1.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

impl Cdn {
    /// Decodes one latent vector. Argmax mode ignores `rng`.
    pub fn generate<R: Rng + ?Sized>(&self, z: &[f32], mode: DecoderMode, rng: &mut R) -> String {
        let mut rng = rng;
        let mut seed = ChaCha8Rng::from_rng(&mut rng);
        self.generate_batch(&[z.to_vec()], mode, core::slice::from_mut(&mut seed)).remove(0)
    }

    /// Decodes every row of `zs`; row `i` samples tokens from `rngs[i]`.
    pub fn generate_batch<R: Rng>(&self, zs: &[Vec<f32>], mode: DecoderMode, rngs: &mut [R]) -> Vec<String> {
        assert_eq!(zs.len(), rngs.len(), "one rng per latent vector");
        let d = self.decoder_tensors();
        let (e, u, v, dz) = (d.embed_dim, d.units, d.vocab, d.latent_dim);
        let n = zs.len();
        let mut out: Vec<String> = vec![String::new(); n];
        let mut active: Vec<usize> = (0..n).collect();

        let mut zmat = Vec::with_capacity(n * dz);
        for z in zs {
            assert_eq!(z.len(), dz, "latent dimension");
            zmat.extend_from_slice(z);
        }
        let mut hc = Vec::with_capacity(n * 2 * u);
        for _ in 0..n {
            hc.extend_from_slice(d.bridge.1);
        }
        kernels::matmul_acc(&zmat, d.bridge.0, &mut hc, n, dz, 2 * u);
        let mut h: Vec<f32> = hc.chunks(2 * u).flat_map(|r| r[..u].iter().copied()).collect();
        let mut c: Vec<f32> = hc.chunks(2 * u).flat_map(|r| r[u..].iter().copied()).collect();
        let mut prev = vec![START; n];

        let steps = self.config.max_len + 1;
        let mut x = Vec::new();
        let mut pre = Vec::new();
        let mut logits = Vec::new();
        let (mut hn, mut cn, mut tc) = (vec![0.0; u], vec![0.0; u], vec![0.0; u]);
        for _ in 0..steps {
            let m = active.len();
            if m == 0 {
                break;
            }
            x.clear();
            for r in 0..m {
                let t = prev[r];
                x.extend_from_slice(&d.embedding[t * e..(t + 1) * e]);
                x.extend_from_slice(&h[r * u..(r + 1) * u]);
            }
            pre.clear();
            for _ in 0..m {
                pre.extend_from_slice(d.lstm.1);
            }
            kernels::matmul_acc(&x, d.lstm.0, &mut pre, m, e + u, 4 * u);
            for r in 0..m {
                kernels::lstm_activate(&mut pre[r * 4 * u..(r + 1) * 4 * u], &c[r * u..(r + 1) * u], &mut hn, &mut cn, &mut tc);
                h[r * u..(r + 1) * u].copy_from_slice(&hn);
                c[r * u..(r + 1) * u].copy_from_slice(&cn);
            }
            logits.clear();
            for _ in 0..m {
                logits.extend_from_slice(d.out.1);
            }
            kernels::matmul_acc(&h[..m * u], d.out.0, &mut logits, m, u, v);

            let mut keep = 0;
            for r in 0..m {
                let row = &mut logits[r * v..(r + 1) * v];
                let cand = active[r];
                let t = match mode {
                    DecoderMode::Argmax => kernels::argmax(row),
                    DecoderMode::Sampling => {
                        kernels::softmax_row(row);
                        sample_index(row, &mut rngs[cand])
                    }
                };
                if t == END {
                    continue;
                }
                if let Some(tok) = self.vocab.token(t).filter(|_| !crate::data::Vocabulary::is_special(t)) {
                    out[cand].push_str(tok);
                }
                // Compact surviving rows to the front.
                if keep != r {
                    h.copy_within(r * u..(r + 1) * u, keep * u);
                    c.copy_within(r * u..(r + 1) * u, keep * u);
                }
                active[keep] = cand;
                prev[keep] = t;
                keep += 1;
            }
            active.truncate(keep);
        }
        out
    }

    /// `k` candidates around an already-encoded prototype. Each candidate
    /// gets its own generator seeded from `rng`, used first for its noise
    /// and then for token sampling.
    pub fn generate_from_latent<R: Rng + ?Sized>(
        &self,
        g: &LatentGaussian,
        diversity: f32,
        k: usize,
        mode: DecoderMode,
        rng: &mut R,
    ) -> Vec<String> {
        let mut rngs: Vec<ChaCha8Rng> = (0..k).map(|_| ChaCha8Rng::seed_from_u64(rng.random())).collect();
        let zs: Vec<Vec<f32>> = rngs.iter_mut().map(|r| apply_noise(g, &diversity_noise(g.dim(), diversity, r))).collect();
        self.generate_batch(&zs, mode, &mut rngs)
    }

    /// Encodes `s` once and decodes `cfg.k` diverse samples around it.
    pub fn generate_from_prototype(&self, s: &str, cfg: &DiversityConfig) -> Result<Vec<String>, ModelError> {
        self.generate_stream(s, cfg, 0)
    }

    fn generate_stream(&self, s: &str, cfg: &DiversityConfig, stream: u64) -> Result<Vec<String>, ModelError> {
        let (_, g) = self.encode_smiles(s.trim())?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        Ok(self.generate_from_latent(&g, cfg.diversity, cfg.k, cfg.mode, &mut rng))
    }

    /// Generates around each prototype. Prototype `j` uses random stream
    /// `j` of `cfg.seed`, so results do not depend on the executor.
    pub fn generate_many<S, E>(&self, prototypes: &[S], cfg: &DiversityConfig, exec: &E) -> Vec<Result<Vec<String>, ModelError>>
    where
        S: AsRef<str> + Sync,
        E: Executor,
    {
        exec.map(prototypes.len(), |j| self.generate_stream(prototypes[j].as_ref(), cfg, j as u64))
    }

    /// Decodes `z ~ N(0, I)`, ignoring any prototype.
    pub fn generate_unconditional<R: Rng + ?Sized>(&self, rng: &mut R, mode: DecoderMode) -> String {
        let z: Vec<f32> = (0..self.config.latent_dim).map(|_| StandardNormal.sample(rng)).collect();
        self.generate(&z, mode, rng)
    }
}
