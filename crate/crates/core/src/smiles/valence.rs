//! Valence and aromaticity checks.
//!
//! Every atom's bond-order sum, together with its hydrogens, must land on
//! an allowed valence for its element and charge. Bare atoms fill up to the
//! smallest allowed valence with implicit hydrogens. Aromatic atoms must sit
//! on a ring of aromatic bonds, and the atoms that still need a pi bond
//! must admit an alternating single/double assignment (a Kekule structure).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::graph::{BondOrder, Element, MolGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Atom(usize),
    Position(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reason {
    ValenceExceeded,
    AromaticOutsideRing,
    NotKekulizable,
    Syntax,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::ValenceExceeded => "valence exceeded",
            Reason::AromaticOutsideRing => "aromatic atom not in an aromatic ring",
            Reason::NotKekulizable => "aromatic system has no Kekule form",
            Reason::Syntax => "syntax error",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub location: Location,
    pub reason: Reason,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidityReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

/// Allowed total valences for an element at a given formal charge.
pub(crate) fn allowed_valences(e: Element, charge: i8) -> Vec<u8> {
    let q = charge as i32;
    let (base, shift): (&[i32], i32) = match e {
        Element::H => (&[1], -q.abs()),
        Element::B => (&[3], -q),
        Element::C => (&[4], -q.abs()),
        Element::N => (&[3, 5], q),
        Element::O => (&[2], q),
        Element::P => (&[3, 5], q),
        Element::S => (&[2, 4, 6], q),
        Element::F | Element::Cl | Element::Br | Element::I => (&[1], q),
    };
    base.iter().map(|v| v + shift).filter(|&v| v >= 0).map(|v| v as u8).collect()
}

/// Per-atom hydrogen and pi requirements for a bare atom with `used` sigma
/// valence. Returns `None` when no allowed valence is large enough.
pub(crate) fn bare_hydrogens(e: Element, charge: i8, aromatic: bool, used: u8) -> Option<(u8, bool)> {
    let v = allowed_valences(e, charge).into_iter().find(|&v| v >= used)?;
    if aromatic && v > used {
        Some((v - used - 1, true))
    } else {
        Some((v - used, false))
    }
}

/// Result of checking a graph, with the quantities canonical emission needs.
#[derive(Debug, Clone)]
pub(crate) struct Analysis {
    /// Bond orders after aromatic bonds that lie on no aromatic ring are
    /// read as single.
    pub orders: Vec<BondOrder>,
    pub hydrogens: Vec<u8>,
    pub violations: Vec<Violation>,
}

/// Aromatic bonds whose removal disconnects their endpoints within the
/// aromatic-bond subgraph.
fn aromatic_bridges(g: &MolGraph) -> Vec<bool> {
    let n = g.atoms.len();
    let aromatic: Vec<usize> = (0..g.bonds.len()).filter(|&k| g.bonds[k].order == BondOrder::Aromatic).collect();
    let mut adj = vec![Vec::new(); n];
    for &k in &aromatic {
        adj[g.bonds[k].a].push(k);
        adj[g.bonds[k].b].push(k);
    }
    let mut bridge = vec![false; g.bonds.len()];
    let mut seen = vec![false; n];
    let mut stack = Vec::new();
    for &k in &aromatic {
        seen.iter_mut().for_each(|s| *s = false);
        let (s, t) = (g.bonds[k].a, g.bonds[k].b);
        seen[s] = true;
        stack.clear();
        stack.push(s);
        while let Some(u) = stack.pop() {
            for &e in &adj[u] {
                if e == k {
                    continue;
                }
                let v = g.bonds[e].other(u);
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        bridge[k] = !seen[t];
    }
    bridge
}

/// Finds a perfect matching of `need` atoms over `edges` by backtracking,
/// always branching on the atom with the fewest open partners.
fn perfect_matching(need: &[bool], adj: &[Vec<usize>]) -> Result<(), usize> {
    let n = need.len();
    let mut matched = vec![false; n];
    let mut budget: u32 = 200_000;
    fn go(need: &[bool], adj: &[Vec<usize>], matched: &mut [bool], budget: &mut u32) -> Result<(), usize> {
        let mut best: Option<(usize, usize)> = None;
        for u in 0..need.len() {
            if need[u] && !matched[u] {
                let open = adj[u].iter().filter(|&&v| !matched[v]).count();
                if best.map_or(true, |b| open < b.1) {
                    best = Some((u, open));
                }
            }
        }
        let Some((u, open)) = best else { return Ok(()) };
        if open == 0 || *budget == 0 {
            return Err(u);
        }
        *budget -= 1;
        matched[u] = true;
        let mut fail = u;
        for &v in &adj[u] {
            if matched[v] {
                continue;
            }
            matched[v] = true;
            match go(need, adj, matched, budget) {
                Ok(()) => return Ok(()),
                Err(x) => fail = x,
            }
            matched[v] = false;
        }
        matched[u] = false;
        Err(fail)
    }
    go(need, adj, &mut matched, &mut budget)
}

pub(crate) fn analyze(g: &MolGraph) -> Analysis {
    let n = g.atoms.len();
    let bridges = aromatic_bridges(g);
    let orders: Vec<BondOrder> = g.bonds.iter().zip(&bridges).map(|(b, &br)| if br { BondOrder::Single } else { b.order }).collect();
    let mut used = vec![0u8; n];
    let mut ring_aromatic = vec![false; n];
    for (b, &o) in g.bonds.iter().zip(&orders) {
        let sigma = match o {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        };
        used[b.a] += sigma;
        used[b.b] += sigma;
        if o == BondOrder::Aromatic {
            ring_aromatic[b.a] = true;
            ring_aromatic[b.b] = true;
        }
    }
    let mut violations = Vec::new();
    let mut hydrogens = vec![0u8; n];
    let mut need_pi = vec![false; n];
    for (i, atom) in g.atoms.iter().enumerate() {
        let bad = |violations: &mut Vec<Violation>, reason| violations.push(Violation { location: Location::Atom(i), reason });
        if atom.aromatic && !ring_aromatic[i] {
            bad(&mut violations, Reason::AromaticOutsideRing);
            continue;
        }
        match atom.explicit_h {
            None => match bare_hydrogens(atom.element, atom.formal_charge, atom.aromatic, used[i]) {
                Some((h, pi)) => {
                    hydrogens[i] = h;
                    need_pi[i] = pi;
                }
                None => bad(&mut violations, Reason::ValenceExceeded),
            },
            Some(h) => {
                let total = used[i] + h;
                hydrogens[i] = h;
                match allowed_valences(atom.element, atom.formal_charge).into_iter().find(|&v| v >= total) {
                    Some(v) => need_pi[i] = atom.aromatic && v > total,
                    None => bad(&mut violations, Reason::ValenceExceeded),
                }
            }
        }
    }
    if violations.is_empty() && need_pi.iter().any(|&x| x) {
        let mut adj = vec![Vec::new(); n];
        for (b, &o) in g.bonds.iter().zip(&orders) {
            if o == BondOrder::Aromatic && need_pi[b.a] && need_pi[b.b] {
                adj[b.a].push(b.b);
                adj[b.b].push(b.a);
            }
        }
        if let Err(u) = perfect_matching(&need_pi, &adj) {
            violations.push(Violation { location: Location::Atom(u), reason: Reason::NotKekulizable });
        }
    }
    Analysis { orders, hydrogens, violations }
}

/// Checks valences and aromaticity, listing every violation found.
pub fn validate(g: &MolGraph) -> ValidityReport {
    let violations = analyze(g).violations;
    ValidityReport { valid: violations.is_empty(), violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::{parse, tokenize};

    fn report(s: &str) -> ValidityReport {
        validate(&parse(&tokenize(s).unwrap()).unwrap())
    }

    fn hydrogens(s: &str) -> Vec<u8> {
        analyze(&parse(&tokenize(s).unwrap()).unwrap()).hydrogens
    }

    #[test]
    fn pentavalent_carbon() {
        let r = report("C(C)(C)(C)(C)C");
        assert!(!r.valid);
        assert_eq!(r.violations, [Violation { location: Location::Atom(0), reason: Reason::ValenceExceeded }]);
    }

    #[test]
    fn drugs_validate() {
        for s in ["c1ccccc1", "NC(=O)c1cnccn1", "NNC(=O)c1ccncc1", "CN=C=O", "c1ccc2[nH]ccc2c1", "O=c1cc[nH]cc1"] {
            assert!(report(s).valid, "{s}");
        }
    }

    #[test]
    fn implicit_hydrogens() {
        assert_eq!(hydrogens("CCO"), [3, 2, 1]);
        assert_eq!(hydrogens("c1ccncc1"), [1, 1, 1, 0, 1, 1]);
        assert_eq!(hydrogens("CS(=O)(=O)C"), [3, 0, 0, 0, 3]);
        assert_eq!(hydrogens("C[N+](C)(C)C"), [3, 0, 3, 3, 3]);
        assert_eq!(hydrogens("[NH4+]"), [4]);
    }

    #[test]
    fn aromatic_failures() {
        let r = report("c1cccc1");
        assert_eq!(r.violations[0].reason, Reason::NotKekulizable);
        let r = report("Cc");
        assert_eq!(r.violations[0].reason, Reason::AromaticOutsideRing);
        let r = report("c1ccnc1");
        assert!(!r.valid);
    }

    #[test]
    fn unbracketed_biaryl_link_reads_single() {
        assert!(report("c1ccc(cc1)c1ccccc1").valid);
        let g = parse(&tokenize("c1ccc(cc1)c1ccccc1").unwrap()).unwrap();
        let a = analyze(&g);
        assert_eq!(a.orders.iter().filter(|&&o| o == BondOrder::Single).count(), 1);
    }

    #[test]
    fn charged_valences() {
        assert!(report("C[N+](C)(C)C").valid);
        assert!(report("C[O-]").valid);
        assert!(!report("C[O-](C)C").valid);
        assert!(report("CS(=O)(=O)N").valid);
        assert!(!report("FCl(F)F").valid);
        assert!(report("O=P(O)(O)O").valid);
    }

    #[test]
    fn every_violation_listed() {
        let r = report("C(C)(C)(C)(C)CO(C)(C)");
        assert_eq!(r.violations.len(), 2);
    }
}
