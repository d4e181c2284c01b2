//! Edit-distance histograms over valid unique candidates.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::metrics::GenerationRun;
use crate::smiles::{is_valid_smiles, levenshtein};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistogramKind {
    PrototypeVsGenerated,
    WithinPopulation,
}

impl HistogramKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HistogramKind::PrototypeVsGenerated => "prototype_vs_generated",
            HistogramKind::WithinPopulation => "within_population",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceHistogram {
    pub kind: HistogramKind,
    pub distances: Vec<usize>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl DistanceHistogram {
    pub fn new(kind: HistogramKind, distances: Vec<usize>) -> DistanceHistogram {
        let n = distances.len() as f64;
        let (mean, std) = if distances.is_empty() {
            (0.0, 0.0)
        } else {
            let mean = distances.iter().sum::<usize>() as f64 / n;
            let var = distances.iter().map(|&d| (d as f64 - mean) * (d as f64 - mean)).sum::<f64>() / n;
            (mean, libm::sqrt(var))
        };
        DistanceHistogram { kind, distances, mean, std }
    }

    /// Occurrences of each distance, in increasing distance order.
    pub fn counts(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for &d in &self.distances {
            *m.entry(d).or_insert(0) += 1;
        }
        m
    }
}

fn valid_unique(run: &GenerationRun) -> Vec<&str> {
    let set: BTreeSet<&str> = run.candidates.iter().map(|c| c.trim()).filter(|c| is_valid_smiles(c)).collect();
    set.into_iter().collect()
}

fn distances(run: &GenerationRun) -> (Vec<usize>, Vec<usize>) {
    let u = valid_unique(run);
    let proto = run.prototype.trim();
    let to_proto = u.iter().map(|c| levenshtein(proto, c)).collect();
    let mut within = Vec::with_capacity(u.len() * u.len().saturating_sub(1) / 2);
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            within.push(levenshtein(u[i], u[j]));
        }
    }
    (to_proto, within)
}

/// Prototype-to-candidate and pairwise candidate distances.
pub fn levenshtein_histograms(run: &GenerationRun) -> (DistanceHistogram, DistanceHistogram) {
    let (p, w) = distances(run);
    (DistanceHistogram::new(HistogramKind::PrototypeVsGenerated, p), DistanceHistogram::new(HistogramKind::WithinPopulation, w))
}

/// Histograms over several runs, with the distances of all runs pooled.
/// Pairs are only formed within a run.
pub fn pooled_histograms(runs: &[GenerationRun]) -> (DistanceHistogram, DistanceHistogram) {
    let (mut p, mut w) = (Vec::new(), Vec::new());
    for r in runs {
        let (a, b) = distances(r);
        p.extend(a);
        w.extend(b);
    }
    (DistanceHistogram::new(HistogramKind::PrototypeVsGenerated, p), DistanceHistogram::new(HistogramKind::WithinPopulation, w))
}
