//! File formats, reports, a thread-pool executor and the `cdn` command
//! line for the conditional diversity network toolkit.
//!
//! The numerical work lives in `cdn-core`; this crate reads and writes
//! files and wires the pieces into commands.

pub mod checkpoint;
pub mod cli;
pub mod io;
pub mod manifest;
pub mod parallel;
pub mod report;

pub use parallel::Rayon;
