//! Shared test corpora: a seeded scaffold x substituent analog library.

#![allow(dead_code)]

use std::collections::BTreeSet;

use cdn_core::smiles::{graph_signature, normalize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Drug-like cores with two attachment points.
pub const SCAFFOLDS: [&str; 16] = [
    "c1cc({0})ccc1{1}",
    "O=C(Nc1ccc({0})cc1){1}",
    "O=C(N1CCN({0})CC1){1}",
    "c1cc({0})ncc1{1}",
    "O=C(Nc1ccccc1{0})c1ccc({1})cc1",
    "c1sc({0})nc1{1}",
    "O=C(Nc1ccc({0})cc1)c1ccc({1})o1",
    "c1cc2nc({0})[nH]c2cc1{1}",
    "O=S(=O)(Nc1ccc({0})cc1){1}",
    "O=C(N1CCC({0})CC1){1}",
    "c1c({0})n[nH]c1{1}",
    "O=C(NC1CCN({0})CC1){1}",
    "c1cc(-c2ccc({0})cc2)ccc1{1}",
    "O=C(OC{0})c1cccc({1})c1",
    "c1nc({0})ncc1{1}",
    "O=C(NC{0})c1ccc({1})s1",
];

pub const SUBSTITUENTS: [&str; 20] = [
    "C",
    "CC",
    "OC",
    "F",
    "Cl",
    "Br",
    "C(F)(F)F",
    "N(C)C",
    "C(=O)O",
    "C#N",
    "OCC",
    "C9CC9",
    "C(C)C",
    "N",
    "O",
    "C(N)=O",
    "CO",
    "NC(C)=O",
    "S(C)(=O)=O",
    "CCO",
];

/// A library member in normalized form with the scaffold it was built on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analog {
    pub smiles: String,
    pub scaffold: usize,
}

fn atomic_weight(z: u8) -> f64 {
    match z {
        1 => 1.008,
        5 => 10.81,
        6 => 12.011,
        7 => 14.007,
        8 => 15.999,
        9 => 18.998,
        15 => 30.974,
        16 => 32.06,
        17 => 35.45,
        35 => 79.904,
        53 => 126.904,
        _ => panic!("no weight for Z={z}"),
    }
}

/// Molecular weight at most 500, at most 5 N/O atoms carrying hydrogen and
/// at most 10 N/O atoms.
pub fn drug_like(s: &str) -> bool {
    let Ok((atoms, _)) = graph_signature(s) else {
        return false;
    };
    let mw: f64 = atoms.iter().map(|&(z, _, _, h)| atomic_weight(z) + h as f64 * atomic_weight(1)).sum();
    let no = |z: u8| z == 7 || z == 8;
    let donors = atoms.iter().filter(|&&(z, _, _, h)| no(z) && h > 0).count();
    let acceptors = atoms.iter().filter(|&&(z, _, _, _)| no(z)).count();
    mw <= 500.0 && donors <= 5 && acceptors <= 10
}

/// Draws scaffold and substituent pairs until `n` distinct drug-like
/// molecules are found, in normalized form.
pub fn analog_library(seed: u64, n: usize) -> Vec<Analog> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    for _ in 0..200 * n {
        if out.len() == n {
            break;
        }
        let scaffold = rng.random_range(0..SCAFFOLDS.len());
        let a = SUBSTITUENTS[rng.random_range(0..SUBSTITUENTS.len())];
        let b = SUBSTITUENTS[rng.random_range(0..SUBSTITUENTS.len())];
        let raw = SCAFFOLDS[scaffold].replace("{0}", a).replace("{1}", b);
        let Ok(smiles) = normalize(&raw) else {
            continue;
        };
        if drug_like(&smiles) && seen.insert(smiles.clone()) {
            out.push(Analog { smiles, scaffold });
        }
    }
    assert_eq!(out.len(), n, "library exhausted");
    out
}

/// The first `per_class` members of each of the first `n_classes`
/// scaffolds, named by scaffold.
pub fn scaffold_classes(lib: &[Analog], pool: &[String], n_classes: usize, per_class: usize) -> Vec<(String, Vec<String>)> {
    let pool: BTreeSet<&str> = pool.iter().map(String::as_str).collect();
    (0..SCAFFOLDS.len())
        .map(|k| {
            let members: Vec<String> = lib
                .iter()
                .filter(|a| a.scaffold == k && pool.contains(a.smiles.as_str()))
                .take(per_class)
                .map(|a| a.smiles.clone())
                .collect();
            (format!("scaffold {k}"), members)
        })
        .filter(|(_, m)| m.len() == per_class)
        .take(n_classes)
        .collect()
}

/// A handful of small molecules that share a compact alphabet.
pub const SMALL: [&str; 12] =
    ["CCO", "CCN", "CC(=O)O", "c1ccccc1", "c1ccncc1", "CC(C)O", "OCCO", "NC(=O)c1ccccc1", "Oc1ccccc1", "CCOC(C)=O", "CN(C)C", "C1CCNCC1"];
