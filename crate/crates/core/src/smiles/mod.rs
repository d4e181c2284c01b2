//! SMILES strings: tokenizing, parsing into a molecular graph, valence
//! validation, canonical re-emission and edit distance.
//!
//! Supported: the organic subset `B C N O P S F Cl Br I`, aromatic
//! `b c n o p s`, bonds `- = #`, ring digits `0`-`9`, branches and bracket
//! atoms with hydrogen count and charge. Isotopes and stereo marks
//! (`@`, `/`, `\`) are accepted and dropped. Dot-separated components are
//! rejected.

mod canon;
mod distance;
mod graph;
mod token;
mod valence;

use alloc::string::String;
use thiserror::Error;

pub use distance::levenshtein;
pub use graph::{parse, Atom, Bond, BondOrder, Element, MolGraph};
pub use token::{tokenize, Token, TokenKind};
pub use valence::{validate, Location, Reason, ValidityReport, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("unknown character at position {0}")]
    UnknownCharacter(usize),
    #[error("bracket atom opened at position {0} is not closed")]
    UnterminatedBracket(usize),
    #[error("malformed bracket atom at position {0}")]
    InvalidBracketAtom(usize),
    #[error("unbalanced branch at position {0}")]
    UnbalancedBranch(usize),
    #[error("empty branch at position {0}")]
    EmptyBranch(usize),
    #[error("ring {0} is never closed")]
    UnclosedRing(u8),
    #[error("ring digit at position {0} does not follow an atom")]
    MisplacedRingDigit(usize),
    #[error("ring closure at position {0} has conflicting bond symbols")]
    ConflictingRingBond(usize),
    #[error("bond at position {0} is not followed by an atom or ring digit")]
    DanglingBond(usize),
    #[error("second bond between the same atoms at position {0}")]
    DuplicateBond(usize),
    #[error("multiple components ('.') at position {0}")]
    MultiComponent(usize),
    #[error("empty SMILES")]
    Empty,
    #[error("not a valid molecule")]
    NotValid,
    #[error("more than ten rings open at once")]
    TooManyRings,
}

/// Tokenizes and parses in one step.
pub fn parse_smiles(s: &str) -> Result<MolGraph, SmilesError> {
    parse(&tokenize(s)?)
}

/// True when `s` tokenizes, parses and validates cleanly. Never fails.
pub fn is_valid_smiles(s: &str) -> bool {
    match parse_smiles(s) {
        Ok(g) => validate(&g).valid,
        Err(_) => false,
    }
}

/// Checks any string, reporting syntax errors as a violation at their
/// source position.
pub fn check(s: &str) -> ValidityReport {
    let syntax = |pos| ValidityReport {
        valid: false,
        violations: alloc::vec![Violation { location: Location::Position(pos), reason: Reason::Syntax }],
    };
    match parse_smiles(s) {
        Ok(g) => validate(&g),
        Err(e) => syntax(e.position().unwrap_or(0)),
    }
}

impl SmilesError {
    /// Source position for errors that carry one.
    pub fn position(&self) -> Option<usize> {
        use SmilesError::*;
        match *self {
            UnknownCharacter(p)
            | UnterminatedBracket(p)
            | InvalidBracketAtom(p)
            | UnbalancedBranch(p)
            | EmptyBranch(p)
            | MisplacedRingDigit(p)
            | ConflictingRingBond(p)
            | DanglingBond(p)
            | DuplicateBond(p)
            | MultiComponent(p) => Some(p),
            UnclosedRing(_) | Empty | NotValid | TooManyRings => None,
        }
    }
}

/// Canonical SMILES for a valid input. Two spellings of the same graph give
/// the same string, and the output is a fixed point.
pub fn normalize(s: &str) -> Result<String, SmilesError> {
    let g = parse_smiles(s).map_err(|_| SmilesError::NotValid)?;
    let a = valence::analyze(&g);
    if !a.violations.is_empty() {
        return Err(SmilesError::NotValid);
    }
    let ranks = canon::canonical_ranks(&g, &a);
    canon::write_smiles(&g, &a, &ranks)
}

/// Writes `s` with its atoms walked in the order given by `ranks` (one rank
/// per atom in input order). Used to produce alternative spellings.
pub fn respell(s: &str, ranks: &[usize]) -> Result<String, SmilesError> {
    let g = parse_smiles(s).map_err(|_| SmilesError::NotValid)?;
    let a = valence::analyze(&g);
    if !a.violations.is_empty() || ranks.len() != g.atoms.len() {
        return Err(SmilesError::NotValid);
    }
    canon::write_smiles(&g, &a, ranks)
}

/// Atoms as (atomic number, aromatic, charge, hydrogens) and bonds as
/// (atom, atom, order).
pub type Signature = (alloc::vec::Vec<(u8, bool, i8, u8)>, alloc::vec::Vec<(u8, u8, BondOrder)>);

/// Atom and bond multisets with hydrogens resolved and bond orders as
/// validation reads them, for comparing two spellings.
pub fn graph_signature(s: &str) -> Result<Signature, SmilesError> {
    let g = parse_smiles(s)?;
    let a = valence::analyze(&g);
    let mut atoms: alloc::vec::Vec<_> =
        g.atoms.iter().zip(&a.hydrogens).map(|(at, &h)| (at.element.atomic_number(), at.aromatic, at.formal_charge, h)).collect();
    let mut bonds: alloc::vec::Vec<_> = g
        .bonds
        .iter()
        .zip(&a.orders)
        .map(|(b, &o)| {
            let x = g.atoms[b.a].element.atomic_number();
            let y = g.atoms[b.b].element.atomic_number();
            (x.min(y), x.max(y), o)
        })
        .collect();
    atoms.sort();
    bonds.sort();
    Ok((atoms, bonds))
}
