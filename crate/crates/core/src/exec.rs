//! Pluggable execution of independent work items.
//!
//! Training minibatches and multi-prototype generation are embarrassingly
//! parallel. The core only needs an order-preserving `map`; callers that
//! have threads supply their own [`Executor`]. Results are always consumed
//! in index order, so output never depends on the worker count.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluates `f(0..len)` and returns the results in index order.
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every item on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}
