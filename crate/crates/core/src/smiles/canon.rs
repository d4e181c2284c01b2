//! Canonical ranking and re-emission of a validated graph.
//!
//! Atoms start from an invariant of (element, charge, degree, aromaticity,
//! hydrogens) and are refined by their neighbourhoods until the partition
//! stops splitting. Remaining ties are broken by promoting one atom of the
//! lowest tied class and refining again. The string is then written by a
//! depth-first walk from the rank-0 atom that visits neighbours in rank
//! order.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::graph::{BondOrder, MolGraph};
use super::valence::{bare_hydrogens, Analysis};
use super::SmilesError;

/// Dense ranks (0..classes) for `keys`, ordered by key.
fn dense_ranks<K: Ord + Clone>(keys: &[K]) -> (Vec<usize>, usize) {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    let ranks = keys.iter().map(|k| sorted.binary_search(k).unwrap()).collect();
    (ranks, sorted.len())
}

fn refine(ranks: &mut Vec<usize>, nbrs: &[Vec<(usize, BondOrder)>]) {
    let mut classes = ranks.iter().copied().max().map_or(0, |m| m + 1);
    loop {
        let keys: Vec<(usize, Vec<(usize, BondOrder)>)> = (0..ranks.len())
            .map(|i| {
                let mut ns: Vec<(usize, BondOrder)> = nbrs[i].iter().map(|&(j, o)| (ranks[j], o)).collect();
                ns.sort();
                (ranks[i], ns)
            })
            .collect();
        let (next, count) = dense_ranks(&keys);
        *ranks = next;
        if count == classes {
            return;
        }
        classes = count;
    }
}

/// Canonical atom order: a permutation rank for every atom.
pub(crate) fn canonical_ranks(g: &MolGraph, a: &Analysis) -> Vec<usize> {
    let n = g.atoms.len();
    let mut nbrs = vec![Vec::new(); n];
    for (b, &o) in g.bonds.iter().zip(&a.orders) {
        nbrs[b.a].push((b.b, o));
        nbrs[b.b].push((b.a, o));
    }
    let keys: Vec<_> = (0..n)
        .map(|i| {
            let at = &g.atoms[i];
            (at.element.atomic_number(), at.formal_charge, nbrs[i].len(), at.aromatic, a.hydrogens[i])
        })
        .collect();
    let mut ranks = dense_ranks(&keys).0;
    refine(&mut ranks, &nbrs);
    loop {
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        let Some(tied) = (0..n).find(|&r| counts[r] > 1) else { return ranks };
        let pick = (0..n).find(|&i| ranks[i] == tied).unwrap();
        // Everything at or above the tied class moves up by one so that the
        // picked atom keeps the lower rank alone.
        for r in ranks.iter_mut() {
            if *r > tied {
                *r += 1;
            }
        }
        for (i, r) in ranks.iter_mut().enumerate() {
            if *r == tied && i != pick {
                *r += 1;
            }
        }
        refine(&mut ranks, &nbrs);
    }
}

fn bond_symbol(order: BondOrder, both_aromatic: bool) -> &'static str {
    match order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single | BondOrder::Aromatic => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

fn write_atom(out: &mut String, g: &MolGraph, a: &Analysis, i: usize, sigma: u8) {
    let at = &g.atoms[i];
    let h = a.hydrogens[i];
    let bare_ok = at.element.organic_subset()
        && at.formal_charge == 0
        && bare_hydrogens(at.element, 0, at.aromatic, sigma).map(|x| x.0) == Some(h)
        && (!at.aromatic || pi_matches(g, a, i, sigma));
    let sym = at.element.symbol();
    if bare_ok {
        if at.aromatic {
            out.push_str(&sym.to_ascii_lowercase());
        } else {
            out.push_str(sym);
        }
        return;
    }
    out.push('[');
    if at.aromatic {
        out.push_str(&sym.to_ascii_lowercase());
    } else {
        out.push_str(sym);
    }
    if h > 0 {
        out.push('H');
        if h > 1 {
            out.push((b'0' + h) as char);
        }
    }
    match at.formal_charge {
        0 => {}
        q => {
            out.push(if q > 0 { '+' } else { '-' });
            let m = q.unsigned_abs();
            if m > 1 {
                out.push((b'0' + m) as char);
            }
        }
    }
    out.push(']');
}

/// Whether a bare aromatic atom would need a pi bond exactly when the
/// original does. With matching hydrogen counts this only differs for
/// bracket atoms whose written hydrogens leave the valence unsaturated.
fn pi_matches(g: &MolGraph, a: &Analysis, i: usize, sigma: u8) -> bool {
    let at = &g.atoms[i];
    let bare_pi = bare_hydrogens(at.element, 0, true, sigma).is_some_and(|x| x.1);
    let total = sigma + a.hydrogens[i];
    let orig_pi =
        super::valence::allowed_valences(at.element, at.formal_charge).into_iter().find(|&v| v >= total).is_some_and(|v| v > total);
    bare_pi == orig_pi
}

/// Ring-closure layout of a depth-first walk.
struct Walk {
    children: Vec<Vec<usize>>,
    /// Ring bonds whose digit is written after each atom as an opening.
    opens: Vec<Vec<usize>>,
    /// Ring bonds whose digit is written after each atom as a closing.
    closes: Vec<Vec<usize>>,
    visited: Vec<bool>,
    ring: Vec<bool>,
}

impl Walk {
    fn visit(&mut self, u: usize, parent: Option<usize>, g: &MolGraph, nbrs: &[Vec<usize>]) {
        self.visited[u] = true;
        for &k in &nbrs[u] {
            if Some(k) == parent || self.ring[k] {
                continue;
            }
            let v = g.bonds[k].other(u);
            if self.visited[v] {
                self.ring[k] = true;
                self.opens[v].push(k);
                self.closes[u].push(k);
            } else {
                self.children[u].push(k);
                self.visit(v, Some(k), g, nbrs);
            }
        }
    }
}

struct Emitter<'a> {
    g: &'a MolGraph,
    a: &'a Analysis,
    sigma: Vec<u8>,
    walk: Walk,
    digit_of: Vec<Option<u8>>,
    free: [bool; 10],
    out: String,
}

impl Emitter<'_> {
    fn bond(&mut self, k: usize) {
        let b = &self.g.bonds[k];
        let both = self.g.atoms[b.a].aromatic && self.g.atoms[b.b].aromatic;
        self.out.push_str(bond_symbol(self.a.orders[k], both));
    }

    fn emit(&mut self, u: usize) -> Result<(), SmilesError> {
        write_atom(&mut self.out, self.g, self.a, u, self.sigma[u]);
        for i in 0..self.walk.closes[u].len() {
            let k = self.walk.closes[u][i];
            let d = self.digit_of[k].take().expect("ring bond opens before it closes");
            self.free[d as usize] = true;
            self.out.push((b'0' + d) as char);
        }
        for i in 0..self.walk.opens[u].len() {
            let k = self.walk.opens[u][i];
            let d = [1u8, 2, 3, 4, 5, 6, 7, 8, 9, 0].into_iter().find(|&d| self.free[d as usize]).ok_or(SmilesError::TooManyRings)?;
            self.free[d as usize] = false;
            self.digit_of[k] = Some(d);
            self.bond(k);
            self.out.push((b'0' + d) as char);
        }
        let kids = self.walk.children[u].clone();
        for (i, &k) in kids.iter().enumerate() {
            let last = i + 1 == kids.len();
            if !last {
                self.out.push('(');
            }
            self.bond(k);
            self.emit(self.g.bonds[k].other(u))?;
            if !last {
                self.out.push(')');
            }
        }
        Ok(())
    }
}

/// Writes the graph as SMILES using `ranks` to order the walk.
pub(crate) fn write_smiles(g: &MolGraph, a: &Analysis, ranks: &[usize]) -> Result<String, SmilesError> {
    let n = g.atoms.len();
    let mut nbrs = g.adjacency();
    for (u, ks) in nbrs.iter_mut().enumerate() {
        ks.sort_by_key(|&k| ranks[g.bonds[k].other(u)]);
    }
    let mut sigma = vec![0u8; n];
    for (b, &o) in g.bonds.iter().zip(&a.orders) {
        let s = match o {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        };
        sigma[b.a] += s;
        sigma[b.b] += s;
    }
    let start = (0..n).min_by_key(|&i| ranks[i]).ok_or(SmilesError::Empty)?;
    let mut walk = Walk {
        children: vec![Vec::new(); n],
        opens: vec![Vec::new(); n],
        closes: vec![Vec::new(); n],
        visited: vec![false; n],
        ring: vec![false; g.bonds.len()],
    };
    walk.visit(start, None, g, &nbrs);
    if walk.visited.iter().any(|&v| !v) {
        return Err(SmilesError::NotValid);
    }
    let mut e = Emitter { g, a, sigma, walk, digit_of: vec![None; g.bonds.len()], free: [true; 10], out: String::new() };
    e.emit(start)?;
    Ok(e.out)
}
