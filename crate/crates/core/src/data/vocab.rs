//! Token inventory and fixed-length integer encoding.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::DataError;

pub const PAD: usize = 0;
pub const START: usize = 1;
pub const END: usize = 2;
pub const UNK: usize = 3;

const SPECIAL_NAMES: [&str; 4] = ["<PAD>", "<START>", "<END>", "<UNK>"];
const SPECIAL_KEYS: [&str; 4] = ["PAD", "START", "END", "UNK"];

/// Splits a SMILES string into model tokens: single characters, except
/// that `Cl` and `Br` stay whole.
pub fn split_tokens(s: &str) -> Vec<&str> {
    let b = s.as_bytes();
    let mut out = Vec::with_capacity(b.len());
    let mut i = 0;
    while i < b.len() {
        let two = i + 1 < b.len() && matches!((b[i], b[i + 1]), (b'C', b'l') | (b'B', b'r'));
        let len = if two { 2 } else { s[i..].chars().next().map_or(1, char::len_utf8) };
        out.push(&s[i..i + len]);
        i += len;
    }
    out
}

/// Dense index over the specials followed by the sorted corpus tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabFile", into = "VocabFile")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    tokens: Vec<String>,
    specials: BTreeMap<String, usize>,
}

impl From<Vocabulary> for VocabFile {
    fn from(v: Vocabulary) -> VocabFile {
        let specials = SPECIAL_KEYS.iter().enumerate().map(|(i, k)| (k.to_string(), i)).collect();
        VocabFile { tokens: v.tokens, specials }
    }
}

impl TryFrom<VocabFile> for Vocabulary {
    type Error = DataError;

    fn try_from(f: VocabFile) -> Result<Vocabulary, DataError> {
        let bad = |m: &str| DataError::BadVocabulary(m.to_string());
        for (i, k) in SPECIAL_KEYS.iter().enumerate() {
            if f.specials.get(*k) != Some(&i) {
                return Err(bad("specials must be PAD=0, START=1, END=2, UNK=3"));
            }
        }
        if f.specials.len() != 4 || f.tokens.len() < 4 || f.tokens[..4] != SPECIAL_NAMES {
            return Err(bad("token list must start with the four specials"));
        }
        let mut index = BTreeMap::new();
        for (i, t) in f.tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(bad("duplicate token"));
            }
        }
        Ok(Vocabulary { tokens: f.tokens, index })
    }
}

impl Vocabulary {
    /// Specials plus the sorted set of tokens occurring in `corpus`.
    pub fn build<S: AsRef<str>>(corpus: &[S]) -> Vocabulary {
        let set: BTreeSet<&str> = corpus.iter().flat_map(|s| split_tokens(s.as_ref())).collect();
        let tokens: Vec<String> = SPECIAL_NAMES.iter().copied().chain(set).map(String::from).collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// All entries in index order, specials first.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, i: usize) -> Option<&str> {
        self.tokens.get(i).map(String::as_str)
    }

    pub fn is_special(i: usize) -> bool {
        i < 4
    }
}

/// `START`, up to `max_len` tokens, `END`, then `PAD` to `max_len + 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSequence {
    pub indices: Vec<usize>,
    pub true_length: usize,
}

impl EncodedSequence {
    /// The decoder targets: tokens `1..=true_length+1` (the molecule and `END`).
    pub fn targets(&self) -> &[usize] {
        &self.indices[1..self.true_length + 2]
    }

    /// The decoder inputs under teacher forcing: `START` and the molecule.
    pub fn inputs(&self) -> &[usize] {
        &self.indices[..self.true_length + 1]
    }
}

pub fn encode(s: &str, v: &Vocabulary, max_len: usize) -> Result<EncodedSequence, DataError> {
    let toks = split_tokens(s);
    if toks.is_empty() {
        return Err(DataError::EmptySequence);
    }
    if toks.len() > max_len {
        return Err(DataError::TooLong { length: toks.len(), max_len });
    }
    let mut indices = Vec::with_capacity(max_len + 2);
    indices.push(START);
    let mut pos = 0;
    for t in &toks {
        match v.index_of(t) {
            Some(i) if !Vocabulary::is_special(i) => indices.push(i),
            _ => return Err(DataError::UnknownToken { token: t.to_string(), position: pos }),
        }
        pos += t.len();
    }
    indices.push(END);
    indices.resize(max_len + 2, PAD);
    Ok(EncodedSequence { indices, true_length: toks.len() })
}

/// Concatenates tokens up to the first `END`, skipping other specials.
pub fn decode(indices: &[usize], v: &Vocabulary) -> String {
    let mut s = String::new();
    for &i in indices {
        if i == END {
            break;
        }
        if !Vocabulary::is_special(i) {
            if let Some(t) = v.token(i) {
                s.push_str(t);
            }
        }
    }
    s
}
