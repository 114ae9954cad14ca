//! Dense tensors and the reverse-mode machinery built on them.

mod element;
mod init;
pub mod kernels;
mod optim;
mod tape;

pub use element::Element;
pub use init::xavier_uniform;
pub use optim::{OptimizerState, RmsProp};
pub use tape::{Gradients, GradientsOf, Tape, TapeOf, Var};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Row-major array with shape metadata.
///
/// An empty shape denotes a scalar holding exactly one element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "TensorRepr<T>",
    bound(serialize = "T: Serialize", deserialize = "T: Element + Deserialize<'de>")
)]
pub struct TensorOf<T: Element> {
    shape: Vec<usize>,
    data: Vec<T>,
}

/// The `f32` tensor every network runs on.
pub type Tensor = TensorOf<f32>;

pub type Tensor64 = TensorOf<f64>;

#[derive(Deserialize)]
struct TensorRepr<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Element> TryFrom<TensorRepr<T>> for TensorOf<T> {
    type Error = Error;

    fn try_from(r: TensorRepr<T>) -> Result<Self> {
        TensorOf::new(r.shape, r.data)
    }
}

impl<T: Element> TensorOf<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        check_shape(&shape)?;
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "shape {:?} needs {} elements, got {}",
                shape,
                expected,
                data.len()
            )));
        }
        Ok(TensorOf { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, T::zero())
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        check_shape(shape).expect("tensor dimensions must be positive");
        let len = shape.iter().product();
        TensorOf {
            shape: shape.to_vec(),
            data: vec![value; len],
        }
    }

    pub fn scalar(value: T) -> Self {
        TensorOf {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> T) -> Self {
        let mut t = Self::zeros(shape);
        for (i, v) in t.data.iter_mut().enumerate() {
            *v = f(i);
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    pub fn item(&self) -> Option<T> {
        self.is_scalar().then(|| self.data[0])
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        check_shape(shape)?;
        let len: usize = shape.iter().product();
        if len != self.data.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} into {:?}",
                self.shape, shape
            )));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Flat offset of a multi-index, or `None` when out of bounds.
    pub fn offset(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.shape.len() {
            return None;
        }
        let mut off = 0;
        for (&i, &d) in index.iter().zip(&self.shape) {
            if i >= d {
                return None;
            }
            off = off * d + i;
        }
        Some(off)
    }

    pub fn get(&self, index: &[usize]) -> Option<T> {
        self.offset(index).map(|o| self.data[o])
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        TensorOf {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    /// Element-wise conversion to another precision.
    pub fn cast<U: Element>(&self) -> TensorOf<U> {
        TensorOf {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::of_f64(v.into_f64())).collect(),
        }
    }

    /// Stack equally shaped tensors along a new leading axis.
    pub fn stack(items: &[&Self]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::Shape("cannot stack zero tensors".into()))?;
        let mut shape = vec![items.len()];
        shape.extend_from_slice(first.shape());
        let mut data = Vec::with_capacity(first.len() * items.len());
        for t in items {
            if t.shape() != first.shape() {
                return Err(Error::Shape(format!(
                    "cannot stack {:?} with {:?}",
                    t.shape(),
                    first.shape()
                )));
            }
            data.extend_from_slice(t.data());
        }
        TensorOf::new(shape, data)
    }

    /// Slice `i` along the leading axis.
    pub fn index_first(&self, i: usize) -> Result<Self> {
        let (&n, rest) = self
            .shape
            .split_first()
            .ok_or_else(|| Error::Shape("cannot index a scalar".into()))?;
        if i >= n {
            return Err(Error::Shape(format!("index {i} out of range for axis of {n}")));
        }
        let stride: usize = rest.iter().product();
        let shape = if rest.is_empty() { Vec::new() } else { rest.to_vec() };
        Ok(TensorOf {
            shape,
            data: self.data[i * stride..(i + 1) * stride].to_vec(),
        })
    }
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.iter().any(|&d| d == 0) {
        return Err(Error::Shape(format!(
            "shape {shape:?} has a zero-sized dimension"
        )));
    }
    Ok(())
}
