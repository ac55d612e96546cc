//! Dense float64 tensors with define-by-run reverse-mode differentiation.
//!
//! A [`Tape`] records one forward pass. Parameters are copied onto the tape
//! from a [`ParamStore`]; after [`Tape::backward`] their gradients can be
//! accumulated back into the store, where [`AdamW`] consumes them.

mod check;
mod checkpoint;
mod kernels;
mod optim;
mod tape;

pub use check::{finite_diff_check, GradCheckReport, REL_ERROR_FLOOR};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_FORMAT};
pub use optim::{AdamW, AdamWConfig};
pub use tape::{Axis, Grads, Tape, Var};

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("{op}: incompatible shapes {a:?} and {b:?}")]
    Shape { op: &'static str, a: Vec<usize>, b: Vec<usize> },
    #[error("invalid tensor: {0}")]
    Invalid(String),
    #[error("loss must have exactly one element, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("unknown parameter {0:?}")]
    UnknownParam(String),
    #[error("parameter {0:?} has no gradient")]
    MissingGrad(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub(crate) fn shape_err(op: &'static str, a: &[usize], b: &[usize]) -> TensorError {
    TensorError::Shape { op, a: a.to_vec(), b: b.to_vec() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(TensorError::Invalid(format!("extents must be positive, got {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(TensorError::Invalid(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data, grad: None })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Self::new(shape.to_vec(), vec![value; n]).expect("positive extents")
    }

    pub fn scalar(x: f64) -> Self {
        Self { shape: vec![1], data: vec![x], grad: None }
    }

    /// Row-major matrix from nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TensorError> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(TensorError::Invalid("ragged rows".into()));
        }
        Self::new(vec![rows.len(), cols], rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    /// Glorot-uniform in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn glorot<R: Rng>(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
        Self::new(shape.to_vec(), data).expect("positive extents")
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn item(&self) -> f64 {
        self.data[0]
    }

    /// Entry `(i, j)` of a matrix.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.shape[self.shape.len() - 1] + j]
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    /// Adds `g` into the gradient slot, allocating it on first use.
    pub fn accumulate_grad(&mut self, g: &[f64]) {
        assert_eq!(g.len(), self.data.len(), "gradient length");
        match &mut self.grad {
            Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
            None => self.grad = Some(g.to_vec()),
        }
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }
}

/// Named trainable tensors in deterministic (sorted) order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: BTreeMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        self.params.insert(name.into(), t);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor, TensorError> {
        self.params.get(name).ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor, TensorError> {
        self.params.get_mut(name).ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.params.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.values().map(Tensor::numel).sum()
    }

    pub fn clear_grads(&mut self) {
        self.params.values_mut().for_each(Tensor::clear_grad);
    }

    /// Adds `(name, gradient)` pairs into the matching parameters.
    pub fn accumulate(&mut self, grads: &[(String, Vec<f64>)]) -> Result<(), TensorError> {
        for (name, g) in grads {
            self.get_mut(name)?.accumulate_grad(g);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Tensor::new(vec![2, 2], vec![1.0; 3]).is_err());
        assert!(Tensor::new(vec![0, 2], vec![]).is_err());
        assert!(Tensor::new(vec![], vec![]).is_err());
        assert!(Tensor::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn grad_slot_is_lazy_and_accumulates() {
        let mut t = Tensor::zeros(&[2]);
        assert!(t.grad().is_none());
        t.accumulate_grad(&[1.0, 2.0]);
        t.accumulate_grad(&[0.5, 0.5]);
        assert_eq!(t.grad(), Some(&[1.5, 2.5][..]));
        t.clear_grad();
        assert!(t.grad().is_none());
    }

    #[test]
    fn store_iterates_sorted() {
        let mut s = ParamStore::new();
        s.insert("b", Tensor::scalar(1.0));
        s.insert("a", Tensor::scalar(2.0));
        assert_eq!(s.names().collect::<Vec<_>>(), ["a", "b"]);
        assert!(matches!(s.get("c"), Err(TensorError::UnknownParam(_))));
    }

    #[test]
    fn glorot_within_bound() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let t = Tensor::glorot(&[30, 20], 30, 20, &mut rng);
        let b = (6.0f64 / 50.0).sqrt();
        assert!(t.data().iter().all(|x| x.abs() <= b));
    }
}
