//! Corpus handling: filtering, vocabulary, encoding and splitting.

mod corpus;
mod vocab;

use alloc::string::String;
use thiserror::Error;

pub use corpus::{default_sizes, filter_corpus, split, split_sizes, CorpusSplit, FilterStats};
pub use vocab::{decode, encode, split_tokens, EncodedSequence, Vocabulary, END, PAD, START, UNK};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataError {
    #[error("no molecules survived filtering")]
    EmptyCorpus,
    #[error("empty sequence")]
    EmptySequence,
    #[error("token {token:?} at position {position} is not in the vocabulary")]
    UnknownToken { token: String, position: usize },
    #[error("{length} tokens exceeds the maximum of {max_len}")]
    TooLong { length: usize, max_len: usize },
    #[error("malformed vocabulary: {0}")]
    BadVocabulary(String),
}
