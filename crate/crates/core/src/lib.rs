//! Core of the conditional diversity network toolkit.
//!
//! Everything in this crate is pure computation over in-memory values and
//! builds without `std`: SMILES tokenizing, parsing, validation and
//! canonical re-emission ([`smiles`]), a dense f32 tensor type with a
//! reverse-mode tape ([`tensor`]), vocabulary and corpus handling
//! ([`data`]), the encoder/diversity-layer/decoder model with its training
//! loop ([`model`]) and the evaluation metrics ([`eval`]).
//!
//! File formats, the command line and thread pools live in the `cdn` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod eval;
pub mod exec;
mod math;
pub mod model;
pub mod smiles;
pub mod tensor;

pub use exec::{Executor, Sequential};
