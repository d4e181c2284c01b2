//! Corpus filtering and train/validation/test splitting.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::vocab::split_tokens;
use super::DataError;
use crate::smiles::normalize;

/// Counts from [`filter_corpus`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FilterStats {
    pub read: usize,
    pub kept: usize,
    pub duplicates: usize,
    pub too_long: usize,
    pub invalid: usize,
}

impl FilterStats {
    pub fn dropped(&self) -> usize {
        self.duplicates + self.too_long + self.invalid
    }
}

/// Trims each line, drops blank lines, entries over `max_len` tokens and
/// invalid molecules, and keeps the first spelling of each normalized form.
pub fn filter_corpus<'a, I>(lines: I, max_len: usize) -> Result<(Vec<String>, FilterStats), DataError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut stats = FilterStats::default();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for line in lines {
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        stats.read += 1;
        if split_tokens(s).len() > max_len {
            stats.too_long += 1;
            continue;
        }
        let Ok(norm) = normalize(s) else {
            stats.invalid += 1;
            continue;
        };
        if !seen.insert(norm) {
            stats.duplicates += 1;
            continue;
        }
        out.push(s.to_string());
    }
    stats.kept = out.len();
    if out.is_empty() {
        return Err(DataError::EmptyCorpus);
    }
    Ok((out, stats))
}

/// Disjoint SMILES splits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

/// Validation and test sizes: 5,000 each above 10,000 molecules, 5% each
/// otherwise.
pub fn default_sizes(n: usize) -> (usize, usize) {
    if n > 10_000 {
        (5_000, 5_000)
    } else {
        let k = (n * 5 + 50) / 100;
        (k, k)
    }
}

/// Seeded split with the default sizes; see [`split_sizes`].
pub fn split<S: AsRef<str>>(corpus: &[S], seed: u64, exclusion: &[S]) -> CorpusSplit {
    let n = survivors(corpus, exclusion).len();
    let (v, t) = default_sizes(n);
    split_sizes(corpus, seed, exclusion, v, t)
}

fn norm_or_raw(s: &str) -> String {
    normalize(s).unwrap_or_else(|_| s.to_string())
}

fn survivors<S: AsRef<str>>(corpus: &[S], exclusion: &[S]) -> Vec<String> {
    let excluded: BTreeSet<String> = exclusion.iter().map(|s| norm_or_raw(s.as_ref().trim())).collect();
    let mut seen = BTreeSet::new();
    corpus
        .iter()
        .map(|s| s.as_ref().trim())
        .filter(|s| {
            let n = norm_or_raw(s);
            !excluded.contains(&n) && seen.insert(n)
        })
        .map(String::from)
        .collect()
}

/// Removes excluded molecules (matched by normalized form) and repeated
/// normalized forms, shuffles with `seed`, then takes validation, test and
/// the remainder as train. Sizes are capped by what is available.
pub fn split_sizes<S: AsRef<str>>(corpus: &[S], seed: u64, exclusion: &[S], validation: usize, test: usize) -> CorpusSplit {
    let mut pool = survivors(corpus, exclusion);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let nv = validation.min(pool.len());
    let nt = test.min(pool.len() - nv);
    let train = pool.split_off(nv + nt);
    let test_set = pool.split_off(nv);
    CorpusSplit { train, validation: pool, test: test_set, seed }
}
