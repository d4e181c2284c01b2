//! Dense f32 tensors, named parameters, a reverse-mode tape and Adam.
//!
//! Shapes are row-major. Every differentiable operation lives on [`Tape`]
//! and is checked against central finite differences by [`grad_check`].

mod adam;
mod gradcheck;
pub mod init;
pub mod kernels;
mod tape;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{grad_check, grad_check_random, GradCheckReport, KINK_RATIO, REL_FLOOR};
pub use tape::{Gradients, Tape, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TensorError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("optimizer state does not match the parameter set")]
    StateShapeMismatch,
}

pub(crate) fn mismatch(op: &'static str, detail: impl Into<String>) -> TensorError {
    TensorError::ShapeMismatch { op, detail: detail.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f32>) -> Result<Tensor, TensorError> {
        let n: usize = shape.iter().product();
        if n != data.len() || shape.contains(&0) {
            return Err(mismatch("Tensor::new", alloc::format!("shape {shape:?} vs {} values", data.len())));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn scalar(v: f32) -> Tensor {
        Tensor { shape: vec![1], data: vec![v] }
    }

    pub fn vector(data: Vec<f32>) -> Tensor {
        Tensor { shape: vec![data.len()], data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Rows and columns when viewed as a matrix; vectors are one row.
    pub fn as_matrix(&self) -> (usize, usize) {
        match self.shape.len() {
            1 => (1, self.shape[0]),
            _ => {
                let cols = *self.shape.last().unwrap();
                (self.data.len() / cols, cols)
            }
        }
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Tensor, TensorError> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(mismatch("reshape", alloc::format!("{:?} -> {shape:?}", self.shape)));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Matrix product of `[m×k]` and `[k×n]`.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        let (m, k) = self.as_matrix();
        let (k2, n) = other.as_matrix();
        if k != k2 || other.shape.len() != 2 {
            return Err(mismatch("matmul", alloc::format!("{:?} x {:?}", self.shape, other.shape)));
        }
        let mut out = Tensor::zeros(&[m, n]);
        kernels::matmul_acc(&self.data, &other.data, &mut out.data, m, k, n);
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

/// Named parameters in registration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Parameter>,
}

impl ParamStore {
    pub fn new() -> ParamStore {
        ParamStore::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let grad = Tensor::zeros(value.shape());
        self.params.push(Parameter { name: name.into(), value, grad });
        ParamId(self.params.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.data.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Adds `scale · g` to each parameter's gradient.
    pub fn accumulate(&mut self, g: &ParamGrads, scale: f32) {
        for (p, d) in self.params.iter_mut().zip(&g.0) {
            if let Some(d) = d {
                kernels::axpy(scale, d, &mut p.grad.data);
            }
        }
    }

    /// Global L2 norm of all gradients.
    pub fn grad_norm(&self) -> f32 {
        let s: f64 = self.params.iter().flat_map(|p| p.grad.data.iter()).map(|&g| (g as f64) * (g as f64)).sum();
        crate::math::sqrt64(s) as f32
    }

    pub fn scale_grads(&mut self, s: f32) {
        for p in &mut self.params {
            p.grad.data.iter_mut().for_each(|g| *g *= s);
        }
    }

    pub fn count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }
}

/// Per-parameter gradients collected from one backward pass; `None` for
/// parameters the tape never touched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamGrads(pub Vec<Option<Vec<f32>>>);

impl ParamGrads {
    /// Sums `other` into `self`.
    pub fn add(&mut self, other: &ParamGrads) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), None);
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            match (a.as_mut(), b) {
                (_, None) => {}
                (Some(a), Some(b)) => a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
                (None, Some(b)) => *a = Some(b.clone()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matmul() {
        let eye = Tensor::new(&[3, 3], vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let x = Tensor::new(&[3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(eye.matmul(&x).unwrap(), x);
    }

    #[test]
    fn two_by_two() {
        let a = Tensor::new(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::new(&[2, 1], vec![0.0, 1.0]).unwrap();
        assert_eq!(a.matmul(&b).unwrap().data(), &[2.0, 4.0]);
    }

    #[test]
    fn matmul_shape_errors() {
        let a = Tensor::zeros(&[2, 3]);
        assert!(matches!(a.matmul(&a), Err(TensorError::ShapeMismatch { .. })));
        assert!(Tensor::new(&[2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn store_accumulates() {
        let mut s = ParamStore::new();
        let id = s.add("w", Tensor::zeros(&[2]));
        let g = ParamGrads(vec![Some(vec![1.0, -2.0])]);
        s.accumulate(&g, 0.5);
        assert_eq!(s.get(id).grad.data(), &[0.5, -1.0]);
        s.zero_grad();
        assert_eq!(s.get(id).grad.data(), &[0.0, 0.0]);
    }
}
