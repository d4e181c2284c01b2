//! Adam with bias correction.

use alloc::vec::Vec;

use super::{ParamStore, Tensor, TensorError};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<Tensor>,
    pub second_moment: Vec<Tensor>,
    pub step_count: u64,
    pub beta1: f32,
    pub beta2: f32,
    pub epsilon: f32,
}

impl AdamState {
    /// Zeroed moments shaped like `store`, with β1 0.9, β2 0.999, ε 1e-8.
    pub fn new(store: &ParamStore) -> AdamState {
        let zeros = || store.iter().map(|p| Tensor::zeros(p.value.shape())).collect::<Vec<_>>();
        AdamState { first_moment: zeros(), second_moment: zeros(), step_count: 0, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// One Adam update of every parameter from its accumulated gradient.
pub fn adam_step(store: &mut ParamStore, state: &mut AdamState, learning_rate: f32) -> Result<(), TensorError> {
    if state.first_moment.len() != store.len()
        || state.second_moment.len() != store.len()
        || store
            .iter()
            .zip(&state.first_moment)
            .zip(&state.second_moment)
            .any(|((p, m), v)| p.value.shape() != m.shape() || p.value.shape() != v.shape())
    {
        return Err(TensorError::StateShapeMismatch);
    }
    state.step_count += 1;
    let t = state.step_count as f64;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = (1.0 - math::exp64(t * math::ln64(b1 as f64))) as f32;
    let c2 = (1.0 - math::exp64(t * math::ln64(b2 as f64))) as f32;
    for ((p, m), v) in store.iter_mut().zip(&mut state.first_moment).zip(&mut state.second_moment) {
        let (value, grad) = (p.value.data_mut(), p.grad.data());
        for (((x, &g), mi), vi) in value.iter_mut().zip(grad).zip(m.data_mut()).zip(v.data_mut()) {
            *mi = b1 * *mi + (1.0 - b1) * g;
            *vi = b2 * *vi + (1.0 - b2) * g * g;
            let mhat = *mi / c1;
            let vhat = *vi / c2;
            *x -= learning_rate * mhat / (math::sqrt(vhat) + eps);
        }
    }
    Ok(())
}
