//! Within-class versus pooled distances between latent embeddings.

use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;

use super::EvalError;
use crate::model::{diverse_sample, Cdn};

pub const ACROSS_ROW: &str = "Across Drugs";

#[derive(Debug, Clone, PartialEq)]
pub struct ClassRow {
    pub name: String,
    pub cosine: f64,
    pub l2: f64,
    pub l1: f64,
}

/// Per-class mean pairwise distances divided by the pooled mean; the last
/// row is the pooled baseline and is 1.0 in every column.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistanceReport {
    pub rows: Vec<ClassRow>,
}

fn measures(a: &[f32], b: &[f32]) -> [f64; 3] {
    let (mut dot, mut na, mut nb, mut l2, mut l1) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
        l2 += (x - y) * (x - y);
        l1 += libm::fabs(x - y);
    }
    let denom = libm::sqrt(na) * libm::sqrt(nb);
    let cosine = if denom == 0.0 { 1.0 } else { 1.0 - dot / denom };
    [cosine, libm::sqrt(l2), l1]
}

fn mean_pairwise(v: &[&[f32]]) -> [f64; 3] {
    let mut acc = [0.0; 3];
    let mut n = 0usize;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let m = measures(v[i], v[j]);
            for k in 0..3 {
                acc[k] += m[k];
            }
            n += 1;
        }
    }
    acc.map(|a| a / n as f64)
}

/// Ratios of in-class to pooled mean pairwise cosine distance
/// (`1 − cos`), L2 and L1 distance.
pub fn class_distances(classes: &[(String, Vec<Vec<f32>>)]) -> Result<ClassDistanceReport, EvalError> {
    for (name, members) in classes {
        if members.len() < 2 {
            return Err(EvalError::ClassTooSmall { class: name.clone(), size: members.len() });
        }
    }
    let pooled: Vec<&[f32]> = classes.iter().flat_map(|(_, m)| m.iter().map(|v| v.as_slice())).collect();
    let across = mean_pairwise(&pooled);
    let ratio = |x: f64, base: f64| if base == 0.0 { 1.0 } else { x / base };
    let mut rows: Vec<ClassRow> = classes
        .iter()
        .map(|(name, members)| {
            let refs: Vec<&[f32]> = members.iter().map(|v| v.as_slice()).collect();
            let m = mean_pairwise(&refs);
            ClassRow { name: name.clone(), cosine: ratio(m[0], across[0]), l2: ratio(m[1], across[1]), l1: ratio(m[2], across[2]) }
        })
        .collect();
    rows.push(ClassRow { name: ACROSS_ROW.into(), cosine: 1.0, l2: 1.0, l1: 1.0 });
    Ok(ClassDistanceReport { rows })
}

/// Embeds every member as one `D = 1` sample from its posterior and
/// compares class distances.
pub fn latent_class_distances<R: Rng + ?Sized>(
    classes: &[(String, Vec<String>)],
    model: &Cdn,
    rng: &mut R,
) -> Result<ClassDistanceReport, EvalError> {
    let mut embedded = Vec::with_capacity(classes.len());
    for (name, members) in classes {
        if members.len() < 2 {
            return Err(EvalError::ClassTooSmall { class: name.clone(), size: members.len() });
        }
        let mut zs = Vec::with_capacity(members.len());
        for s in members {
            let (_, g) = model.encode_smiles(s.trim())?;
            zs.push(diverse_sample(&g, 1.0, rng));
        }
        embedded.push((name.clone(), zs));
    }
    class_distances(&embedded)
}
