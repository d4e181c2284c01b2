//! Per-run accuracy, validity and novelty, and the drug-hit count.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::split_tokens;
use crate::model::DiversityConfig;
use crate::smiles::{is_valid_smiles, normalize};

/// The candidates generated around one prototype.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRun {
    pub prototype: String,
    pub candidates: Vec<String>,
    pub cfg: DiversityConfig,
}

/// Fractions are per-candidate means. The `_at_k` fields are counts over
/// the run: summed accuracy, valid candidates and unique novel strings.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsReport {
    pub acc: f64,
    pub valid: f64,
    pub novel: f64,
    /// Valid candidates whose normalized form differs from the prototype's.
    pub novel_graph: f64,
    pub acc_at_k: f64,
    pub valid_at_k: f64,
    pub novel_at_k: f64,
}

impl MetricsReport {
    /// Field-wise mean over runs; the empty slice gives all zeros.
    pub fn mean(reports: &[MetricsReport]) -> MetricsReport {
        if reports.is_empty() {
            return MetricsReport::default();
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        MetricsReport {
            acc: avg(|r| r.acc),
            valid: avg(|r| r.valid),
            novel: avg(|r| r.novel),
            novel_graph: avg(|r| r.novel_graph),
            acc_at_k: avg(|r| r.acc_at_k),
            valid_at_k: avg(|r| r.valid_at_k),
            novel_at_k: avg(|r| r.novel_at_k),
        }
    }

    /// Named values in a fixed order, for reports.
    pub fn entries(&self) -> [(&'static str, f64); 7] {
        [
            ("acc", self.acc),
            ("valid", self.valid),
            ("novel", self.novel),
            ("novel_graph", self.novel_graph),
            ("acc_at_k", self.acc_at_k),
            ("valid_at_k", self.valid_at_k),
            ("novel_at_k", self.novel_at_k),
        ]
    }
}

/// Positionwise token agreement between `prototype` and `candidate`.
///
/// Both strings are tokenized and terminated by END. Positions are those
/// of the prototype's tokens plus its END; a candidate that runs out
/// counts as a miss at every remaining position.
pub fn reconstruction_accuracy(prototype: &str, candidate: &str) -> f64 {
    let p = split_tokens(prototype.trim());
    let c = split_tokens(candidate.trim());
    // `None` marks END; positions past END are absent.
    fn at<'a>(t: &[&'a str], i: usize) -> Option<Option<&'a str>> {
        match i.cmp(&t.len()) {
            core::cmp::Ordering::Less => Some(Some(t[i])),
            core::cmp::Ordering::Equal => Some(None),
            core::cmp::Ordering::Greater => None,
        }
    }
    let n = p.len() + 1;
    let hits = (0..n).filter(|&i| at(&c, i).is_some() && at(&c, i) == at(&p, i)).count();
    hits as f64 / n as f64
}

pub fn evaluate_run(run: &GenerationRun) -> MetricsReport {
    let proto = run.prototype.trim();
    let proto_norm = normalize(proto).ok();
    let k = run.candidates.len();
    if k == 0 {
        return MetricsReport::default();
    }
    let mut acc = 0.0;
    let (mut valid, mut novel, mut novel_graph) = (0usize, 0usize, 0usize);
    let mut unique = BTreeSet::new();
    for c in &run.candidates {
        let c = c.trim();
        acc += reconstruction_accuracy(proto, c);
        if !is_valid_smiles(c) {
            continue;
        }
        valid += 1;
        if c != proto {
            novel += 1;
            unique.insert(c);
        }
        if normalize(c).ok() != proto_norm {
            novel_graph += 1;
        }
    }
    let kf = k as f64;
    MetricsReport {
        acc: acc / kf,
        valid: valid as f64 / kf,
        novel: novel as f64 / kf,
        novel_graph: novel_graph as f64 / kf,
        acc_at_k: acc,
        valid_at_k: valid as f64,
        novel_at_k: unique.len() as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrugHit {
    pub prototype: String,
    pub candidate: String,
    pub normalized: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DrugHitReport {
    /// One entry per distinct normalized hit, first occurrence kept.
    pub hits: Vec<DrugHit>,
    pub valid_generated: usize,
    /// Unique hits as a percentage of all valid candidates.
    pub percent: f64,
}

/// Valid candidates that are listed drugs other than their own prototype,
/// matched by normalized form.
pub fn drug_hit_report<S: AsRef<str>>(runs: &[GenerationRun], fda_list: &[S]) -> DrugHitReport {
    let fda: BTreeSet<String> = fda_list.iter().filter_map(|s| normalize(s.as_ref().trim()).ok()).collect();
    let mut hits: BTreeMap<String, DrugHit> = BTreeMap::new();
    let mut order = Vec::new();
    let mut valid_generated = 0;
    for run in runs {
        let proto = normalize(run.prototype.trim()).ok();
        for c in &run.candidates {
            let Ok(n) = normalize(c.trim()) else { continue };
            valid_generated += 1;
            if Some(&n) == proto.as_ref() || !fda.contains(&n) || hits.contains_key(&n) {
                continue;
            }
            order.push(n.clone());
            hits.insert(n.clone(), DrugHit { prototype: run.prototype.trim().into(), candidate: c.trim().into(), normalized: n });
        }
    }
    let hits: Vec<DrugHit> = order.into_iter().filter_map(|n| hits.remove(&n)).collect();
    let percent = if valid_generated == 0 { 0.0 } else { 100.0 * hits.len() as f64 / valid_generated as f64 };
    DrugHitReport { hits, valid_generated, percent }
}
