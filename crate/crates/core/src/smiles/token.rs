//! Lexical layer: splits a SMILES string into atoms, bonds, branches,
//! ring digits and bracket atoms.

use alloc::vec::Vec;

use super::SmilesError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Atom,
    Bond,
    BranchOpen,
    BranchClose,
    RingDigit,
    BracketAtom,
}

/// A slice of the source string with its lexical class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    /// Byte offset of the first character in the source.
    pub position: usize,
}

fn bracket_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, b'+' | b'-' | b'@')
}

/// Splits `s` into tokens. `Cl` and `Br` are single tokens; a bracket atom
/// is one token from `[` to the matching `]`.
///
/// `/` and `\` are lexed as bonds and `.` as a bond-like separator so that
/// the parser can report it precisely.
pub fn tokenize(s: &str) -> Result<Vec<Token<'_>>, SmilesError> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let (kind, len) = match c {
            b'C' if bytes.get(i + 1) == Some(&b'l') => (TokenKind::Atom, 2),
            b'B' if bytes.get(i + 1) == Some(&b'r') => (TokenKind::Atom, 2),
            b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I' => (TokenKind::Atom, 1),
            b'b' | b'c' | b'n' | b'o' | b'p' | b's' => (TokenKind::Atom, 1),
            b'-' | b'=' | b'#' | b'/' | b'\\' | b'.' => (TokenKind::Bond, 1),
            b'(' => (TokenKind::BranchOpen, 1),
            b')' => (TokenKind::BranchClose, 1),
            b'0'..=b'9' => (TokenKind::RingDigit, 1),
            b'[' => {
                let mut j = i + 1;
                loop {
                    match bytes.get(j) {
                        None => return Err(SmilesError::UnterminatedBracket(i)),
                        Some(b']') => break,
                        Some(&b) if bracket_char(b) => j += 1,
                        Some(b'[') => return Err(SmilesError::UnterminatedBracket(i)),
                        Some(_) => return Err(SmilesError::UnknownCharacter(j)),
                    }
                }
                (TokenKind::BracketAtom, j + 1 - i)
            }
            _ => return Err(SmilesError::UnknownCharacter(i)),
        };
        out.push(Token { kind, text: &s[i..i + len], position: i });
        i += len;
    }
    Ok(out)
}
