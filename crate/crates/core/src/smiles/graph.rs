//! Molecular graph and the SMILES parser that builds it.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::token::{Token, TokenKind};
use super::SmilesError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    H,
    B,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
    Br,
    I,
}

impl Element {
    pub fn atomic_number(self) -> u8 {
        match self {
            Element::H => 1,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    fn from_symbol(s: &str) -> Option<Element> {
        Some(match s {
            "H" => Element::H,
            "B" => Element::B,
            "C" => Element::C,
            "N" => Element::N,
            "O" => Element::O,
            "F" => Element::F,
            "P" => Element::P,
            "S" => Element::S,
            "Cl" => Element::Cl,
            "Br" => Element::Br,
            "I" => Element::I,
            _ => return None,
        })
    }

    /// Elements that may be written in lowercase.
    pub fn can_be_aromatic(self) -> bool {
        matches!(self, Element::B | Element::C | Element::N | Element::O | Element::P | Element::S)
    }

    /// Elements writable without brackets.
    pub fn organic_subset(self) -> bool {
        !matches!(self, Element::H)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Bond order in half units, so that aromatic is exactly 3.
    pub fn doubled(self) -> u8 {
        match self {
            BondOrder::Single => 2,
            BondOrder::Double => 4,
            BondOrder::Triple => 6,
            BondOrder::Aromatic => 3,
        }
    }

    pub fn value(self) -> f32 {
        self.doubled() as f32 / 2.0
    }

    fn from_symbol(c: &str) -> Option<BondOrder> {
        match c {
            "-" | "/" | "\\" => Some(BondOrder::Single),
            "=" => Some(BondOrder::Double),
            "#" => Some(BondOrder::Triple),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub formal_charge: i8,
    /// Hydrogen count written inside brackets; `None` for bare atoms, whose
    /// hydrogens are implicit.
    pub explicit_h: Option<u8>,
}

impl Atom {
    pub fn bracketed(&self) -> bool {
        self.explicit_h.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub order: BondOrder,
    pub a: usize,
    pub b: usize,
}

impl Bond {
    pub fn other(&self, i: usize) -> usize {
        if self.a == i {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MolGraph {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    /// Ring digits awaiting closure. Always empty after a successful parse.
    pub ring_closures: BTreeMap<u8, (usize, Option<BondOrder>)>,
    pub branch_count: usize,
    pub ring_count: usize,
}

impl MolGraph {
    /// Sum of bond orders at atom `i`, counting aromatic bonds as 1.5.
    pub fn degree(&self, i: usize) -> f32 {
        self.bonds.iter().filter(|b| b.a == i || b.b == i).map(|b| b.order.value()).sum()
    }

    /// Bond indices incident to each atom, in bond order.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = alloc::vec![Vec::new(); self.atoms.len()];
        for (k, b) in self.bonds.iter().enumerate() {
            adj[b.a].push(k);
            adj[b.b].push(k);
        }
        adj
    }

    fn bond_between(&self, a: usize, b: usize) -> bool {
        self.bonds.iter().any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a))
    }

    fn add_bond(&mut self, a: usize, b: usize, order: Option<BondOrder>, position: usize) -> Result<(), SmilesError> {
        if a == b || self.bond_between(a, b) {
            return Err(SmilesError::DuplicateBond(position));
        }
        let order = order.unwrap_or(if self.atoms[a].aromatic && self.atoms[b].aromatic { BondOrder::Aromatic } else { BondOrder::Single });
        self.bonds.push(Bond { order, a, b });
        Ok(())
    }
}

fn bare_atom(text: &str) -> Atom {
    let (element, aromatic) = match text {
        "b" => (Element::B, true),
        "c" => (Element::C, true),
        "n" => (Element::N, true),
        "o" => (Element::O, true),
        "p" => (Element::P, true),
        "s" => (Element::S, true),
        t => (Element::from_symbol(t).expect("tokenizer admits only organic-subset atoms"), false),
    };
    Atom { element, aromatic, formal_charge: 0, explicit_h: None }
}

/// Parses the inside of a bracket atom: isotope, symbol, chirality,
/// hydrogen count and charge. Isotope and chirality are dropped.
fn bracket_atom(tok: &Token<'_>) -> Result<Atom, SmilesError> {
    let err = SmilesError::InvalidBracketAtom(tok.position);
    let body = &tok.text.as_bytes()[1..tok.text.len() - 1];
    let mut i = 0;
    while i < body.len() && body[i].is_ascii_digit() {
        i += 1;
    }
    let sym_start = i;
    if i >= body.len() || !body[i].is_ascii_alphabetic() {
        return Err(err);
    }
    i += 1;
    if i < body.len() && body[i].is_ascii_lowercase() && body[sym_start].is_ascii_uppercase() {
        i += 1;
    }
    let sym = core::str::from_utf8(&body[sym_start..i]).map_err(|_| err.clone())?;
    let (element, aromatic) = match Element::from_symbol(sym) {
        Some(e) => (e, false),
        None => {
            // A two-letter lowercase read like "cH" is an aromatic atom
            // followed by something else; retry with one letter.
            let one = &sym[..1];
            if one.as_bytes()[0].is_ascii_lowercase() {
                let upper = one.as_bytes()[0].to_ascii_uppercase();
                let e = Element::from_symbol(core::str::from_utf8(&[upper]).map_err(|_| err.clone())?)
                    .filter(|e| e.can_be_aromatic())
                    .ok_or(err.clone())?;
                i = sym_start + 1;
                (e, true)
            } else {
                match Element::from_symbol(one) {
                    Some(e) => {
                        i = sym_start + 1;
                        (e, false)
                    }
                    None => return Err(err),
                }
            }
        }
    };
    while i < body.len() && body[i] == b'@' {
        i += 1;
    }
    let mut h = 0u8;
    if i < body.len() && body[i] == b'H' {
        i += 1;
        h = 1;
        if i < body.len() && body[i].is_ascii_digit() {
            h = body[i] - b'0';
            i += 1;
        }
    }
    let mut charge: i32 = 0;
    if i < body.len() && (body[i] == b'+' || body[i] == b'-') {
        let sign = if body[i] == b'+' { 1 } else { -1 };
        let sym = body[i];
        i += 1;
        let mut mag = 1;
        if i < body.len() && body[i].is_ascii_digit() {
            mag = (body[i] - b'0') as i32;
            i += 1;
        } else {
            while i < body.len() && body[i] == sym {
                mag += 1;
                i += 1;
            }
        }
        charge = sign * mag;
    }
    if i != body.len() || !(-4..=4).contains(&charge) {
        return Err(err);
    }
    Ok(Atom { element, aromatic, formal_charge: charge as i8, explicit_h: Some(h) })
}

/// Builds a molecular graph from a token stream.
///
/// Bond order comes from the preceding bond token; without one it is
/// aromatic between two aromatic atoms and single otherwise. Stereo bonds
/// (`/`, `\`) are read as single bonds.
pub fn parse(tokens: &[Token<'_>]) -> Result<MolGraph, SmilesError> {
    let mut g = MolGraph::default();
    let mut prev: Option<usize> = None;
    let mut pending: Option<(BondOrder, usize)> = None;
    // (atom the branch hangs from, atom count at open, position of '(')
    let mut branches: Vec<(usize, usize, usize)> = Vec::new();
    for tok in tokens {
        match tok.kind {
            TokenKind::Atom | TokenKind::BracketAtom => {
                let atom = if tok.kind == TokenKind::Atom { bare_atom(tok.text) } else { bracket_atom(tok)? };
                let idx = g.atoms.len();
                g.atoms.push(atom);
                match prev {
                    Some(p) => g.add_bond(p, idx, pending.take().map(|x| x.0), tok.position)?,
                    None => {
                        if let Some((_, pos)) = pending {
                            return Err(SmilesError::DanglingBond(pos));
                        }
                    }
                }
                prev = Some(idx);
            }
            TokenKind::Bond => {
                if tok.text == "." {
                    return Err(SmilesError::MultiComponent(tok.position));
                }
                if prev.is_none() || pending.is_some() {
                    return Err(SmilesError::DanglingBond(pending.map_or(tok.position, |p| p.1)));
                }
                let order = BondOrder::from_symbol(tok.text).expect("tokenizer admits only bond symbols");
                pending = Some((order, tok.position));
            }
            TokenKind::BranchOpen => {
                let p = prev.ok_or(SmilesError::UnbalancedBranch(tok.position))?;
                if let Some((_, pos)) = pending {
                    return Err(SmilesError::DanglingBond(pos));
                }
                if branches.last().is_some_and(|b| b.1 == g.atoms.len()) {
                    return Err(SmilesError::EmptyBranch(tok.position));
                }
                branches.push((p, g.atoms.len(), tok.position));
            }
            TokenKind::BranchClose => {
                if let Some((_, pos)) = pending {
                    return Err(SmilesError::DanglingBond(pos));
                }
                let (p, count, _) = branches.pop().ok_or(SmilesError::UnbalancedBranch(tok.position))?;
                if count == g.atoms.len() {
                    return Err(SmilesError::EmptyBranch(tok.position));
                }
                g.branch_count += 1;
                prev = Some(p);
            }
            TokenKind::RingDigit => {
                let p = prev.ok_or(SmilesError::MisplacedRingDigit(tok.position))?;
                let digit = tok.text.as_bytes()[0] - b'0';
                let order = pending.take().map(|x| x.0);
                match g.ring_closures.remove(&digit) {
                    Some((open, open_order)) => {
                        let order = match (open_order, order) {
                            (Some(a), Some(b)) if a != b => return Err(SmilesError::ConflictingRingBond(tok.position)),
                            (a, b) => a.or(b),
                        };
                        g.add_bond(open, p, order, tok.position)?;
                        g.ring_count += 1;
                    }
                    None => {
                        g.ring_closures.insert(digit, (p, order));
                    }
                }
            }
        }
    }
    if let Some((_, pos)) = pending {
        return Err(SmilesError::DanglingBond(pos));
    }
    if let Some(&(_, _, pos)) = branches.last() {
        return Err(SmilesError::UnbalancedBranch(pos));
    }
    if let Some((&digit, _)) = g.ring_closures.iter().next() {
        return Err(SmilesError::UnclosedRing(digit));
    }
    if g.atoms.is_empty() {
        return Err(SmilesError::Empty);
    }
    Ok(g)
}
