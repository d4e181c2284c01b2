//! Latent Gaussian and the diversity layer.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::math;

/// Per-molecule posterior `N(μ, σ²)` with `σ = exp(log_sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGaussian {
    pub mu: Vec<f32>,
    pub log_sigma: Vec<f32>,
}

impl LatentGaussian {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn sigma(&self) -> Vec<f32> {
        self.log_sigma.iter().map(|&s| math::exp(s)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderMode {
    Argmax,
    Sampling,
}

impl DecoderMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DecoderMode::Argmax => "argmax",
            DecoderMode::Sampling => "sampling",
        }
    }

    pub fn parse(s: &str) -> Option<DecoderMode> {
        match s {
            "argmax" => Some(DecoderMode::Argmax),
            "sampling" => Some(DecoderMode::Sampling),
            _ => None,
        }
    }
}

/// Settings for prototype-conditioned generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiversityConfig {
    /// Variance multiplier `D` of the sampling noise.
    pub diversity: f32,
    /// Candidates per prototype.
    pub k: usize,
    pub mode: DecoderMode,
    pub seed: u64,
}

/// Draws `n ~ N(0, D)` elementwise (variance `D`, std `√D`).
pub fn diversity_noise<R: Rng + ?Sized>(dim: usize, diversity: f32, rng: &mut R) -> Vec<f32> {
    let scale = math::sqrt(diversity);
    (0..dim)
        .map(|_| {
            let n: f32 = StandardNormal.sample(rng);
            n * scale
        })
        .collect()
}

/// `z = n ⊙ σ + μ` with `n ~ N(0, D)`, so `z ~ N(μ, σ²·D)`.
///
/// A `log_sigma` of `-∞` gives `σ = 0` and returns `μ` exactly.
pub fn diverse_sample<R: Rng + ?Sized>(g: &LatentGaussian, diversity: f32, rng: &mut R) -> Vec<f32> {
    let n = diversity_noise(g.dim(), diversity, rng);
    apply_noise(g, &n)
}

/// `n ⊙ σ + μ` for pre-drawn noise.
pub fn apply_noise(g: &LatentGaussian, n: &[f32]) -> Vec<f32> {
    g.mu.iter()
        .zip(&g.log_sigma)
        .zip(n)
        .map(|((&m, &s), &e)| {
            let sigma = math::exp(s);
            if sigma == 0.0 {
                m
            } else {
                e * sigma + m
            }
        })
        .collect()
}
