//! Operation recording and reverse-mode replay.

use super::{kernels, Element, TensorOf};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<T: Element> {
    Leaf,
    Conv2d { input: Var, weight: Var, bias: Var },
    Linear { x: Var, weight: Var, bias: Var },
    Relu(Var),
    Reshape(Var),
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Sum(Var),
    SoftmaxCrossEntropy { logits: Var, targets: Vec<usize>, probs: TensorOf<T> },
}

#[derive(Debug)]
struct Node<T: Element> {
    value: TensorOf<T>,
    op: Op<T>,
}

/// Linear record of every primitive applied since creation.
///
/// Values are computed eagerly as operations are recorded; [`Tape::backward`]
/// walks the record once in reverse.
#[derive(Debug)]
pub struct TapeOf<T: Element> {
    nodes: Vec<Node<T>>,
}

pub type Tape = TapeOf<f32>;

impl<T: Element> Default for TapeOf<T> {
    fn default() -> Self {
        TapeOf { nodes: Vec::new() }
    }
}

/// Gradients produced by one backward pass, indexed by [`Var`].
#[derive(Debug)]
pub struct GradientsOf<T: Element> {
    grads: Vec<Option<TensorOf<T>>>,
    visited: Vec<usize>,
}

pub type Gradients = GradientsOf<f32>;

impl<T: Element> GradientsOf<T> {
    pub fn get(&self, var: Var) -> Option<&TensorOf<T>> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, var: Var) -> Option<TensorOf<T>> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }

    /// Node indices in the order the backward pass processed them.
    pub fn visit_order(&self) -> &[usize] {
        &self.visited
    }
}

impl<T: Element> TapeOf<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: TensorOf<T>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, var: Var) -> &TensorOf<T> {
        &self.nodes[var.0].value
    }

    fn push(&mut self, value: TensorOf<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn conv2d(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let out = kernels::conv2d(self.value(input), self.value(weight), self.value(bias))?;
        Ok(self.push(out, Op::Conv2d { input, weight, bias }))
    }

    pub fn linear(&mut self, x: Var, weight: Var, bias: Var) -> Result<Var> {
        let out = kernels::linear(self.value(x), self.value(weight), self.value(bias))?;
        Ok(self.push(out, Op::Linear { x, weight, bias }))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = kernels::relu(self.value(x));
        self.push(out, Op::Relu(x))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(x).clone().reshape(shape)?;
        Ok(self.push(out, Op::Reshape(x)))
    }

    /// Collapse every axis after the first: `[N, ...] -> [N, prod(...)]`.
    pub fn flatten(&mut self, x: Var) -> Result<Var> {
        let shape = self.value(x).shape();
        let n = *shape
            .first()
            .ok_or_else(|| Error::Shape("cannot flatten a scalar".into()))?;
        let rest = self.value(x).len() / n;
        self.reshape(x, &[n, rest])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip(a, b, "add", |x, y| x + y)?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip(a, b, "mul", |x, y| x * y)?;
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, x: Var, factor: T) -> Var {
        let out = self.value(x).map(|v| v * factor);
        self.push(out, Op::Scale(x, factor))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let out = TensorOf::scalar(self.value(x).sum());
        self.push(out, Op::Sum(x))
    }

    /// Mean softmax cross-entropy over the batch; produces a scalar.
    pub fn softmax_cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let (loss, probs) = kernels::softmax_cross_entropy(self.value(logits), targets)?;
        Ok(self.push(
            TensorOf::scalar(loss),
            Op::SoftmaxCrossEntropy {
                logits,
                targets: targets.to_vec(),
                probs,
            },
        ))
    }

    fn zip(&self, a: Var, b: Var, name: &str, f: impl Fn(T, T) -> T) -> Result<TensorOf<T>> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::Shape(format!(
                "{name}: shapes {:?} and {:?} differ",
                ta.shape(),
                tb.shape()
            )));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        TensorOf::new(ta.shape().to_vec(), data)
    }

    /// Reverse-mode gradients of a scalar `loss` with respect to every node.
    pub fn backward(&self, loss: Var) -> Result<GradientsOf<T>> {
        let value = self.value(loss);
        if !value.is_scalar() {
            return Err(Error::Shape(format!(
                "backward needs a scalar loss, got shape {:?}",
                value.shape()
            )));
        }
        self.backward_with_seed(loss, TensorOf::new(value.shape().to_vec(), vec![T::one()])?)
    }

    /// Vector-Jacobian product: propagate `seed` (shaped like `output`) back
    /// through the tape.
    pub fn backward_with_seed(&self, output: Var, seed: TensorOf<T>) -> Result<GradientsOf<T>> {
        if seed.shape() != self.value(output).shape() {
            return Err(Error::Shape(format!(
                "seed shape {:?} does not match output {:?}",
                seed.shape(),
                self.value(output).shape()
            )));
        }
        let mut grads: Vec<Option<TensorOf<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.0] = Some(seed);
        let mut visited = Vec::with_capacity(output.0 + 1);

        for idx in (0..=output.0).rev() {
            visited.push(idx);
            let Some(upstream) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(upstream);
                    continue;
                }
                Op::Conv2d { input, weight, bias } => {
                    let g = kernels::conv2d_backward(
                        self.value(*input),
                        self.value(*weight),
                        self.value(*bias),
                        &upstream,
                    )?;
                    accumulate(&mut grads, *input, g.input);
                    accumulate(&mut grads, *weight, g.weight);
                    accumulate(&mut grads, *bias, g.bias);
                }
                Op::Linear { x, weight, bias } => {
                    let g = kernels::linear_backward(
                        self.value(*x),
                        self.value(*weight),
                        self.value(*bias),
                        &upstream,
                    )?;
                    accumulate(&mut grads, *x, g.x);
                    accumulate(&mut grads, *weight, g.weight);
                    accumulate(&mut grads, *bias, g.bias);
                }
                Op::Relu(x) => {
                    let g = kernels::relu_backward(self.value(*x), &upstream);
                    accumulate(&mut grads, *x, g);
                }
                Op::Reshape(x) => {
                    let g = upstream.reshape(self.value(*x).shape())?;
                    accumulate(&mut grads, *x, g);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, upstream.clone());
                    accumulate(&mut grads, *b, upstream);
                }
                Op::Mul(a, b) => {
                    let ga = elementwise(&upstream, self.value(*b), |g, v| g * v);
                    let gb = elementwise(&upstream, self.value(*a), |g, v| g * v);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Scale(x, factor) => {
                    let f = *factor;
                    accumulate(&mut grads, *x, upstream.map(|g| g * f));
                }
                Op::Sum(x) => {
                    let g = upstream.data()[0];
                    accumulate(&mut grads, *x, TensorOf::full(self.value(*x).shape(), g));
                }
                Op::SoftmaxCrossEntropy {
                    logits,
                    targets,
                    probs,
                } => {
                    let g = upstream.data()[0];
                    let k = probs.shape()[1];
                    let n = T::of_f64(targets.len() as f64);
                    let mut d = probs.clone();
                    for (row, &t) in d.data_mut().chunks_exact_mut(k).zip(targets) {
                        row[t] -= T::one();
                        for v in row.iter_mut() {
                            *v *= g / n;
                        }
                    }
                    accumulate(&mut grads, *logits, d);
                }
            }
        }
        Ok(GradientsOf { grads, visited })
    }
}

fn elementwise<T: Element>(a: &TensorOf<T>, b: &TensorOf<T>, f: impl Fn(T, T) -> T) -> TensorOf<T> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    TensorOf::new(a.shape().to_vec(), data).expect("elementwise shape")
}

fn accumulate<T: Element>(grads: &mut [Option<TensorOf<T>>], var: Var, g: TensorOf<T>) {
    match &mut grads[var.0] {
        Some(existing) => {
            for (acc, v) in existing.data_mut().iter_mut().zip(g.data()) {
                *acc += *v;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn relu_gradient_at_one() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(1.0));
        let y = tape.relu(x);
        let g = tape.backward(y).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[1.0]);
    }

    #[test]
    fn softmax_ce_gradient_is_p_minus_y() {
        let mut tape = Tape::new();
        let z = tape.leaf(Tensor::new(vec![1, 2], vec![0.0, 0.0]).unwrap());
        let loss = tape.softmax_cross_entropy(z, &[0]).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(z).unwrap().data(), &[-0.5, 0.5]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::zeros(&[2]));
        let y = tape.relu(x);
        assert!(matches!(tape.backward(y), Err(Error::Shape(_))));
    }

    #[test]
    fn reused_operand_accumulates() {
        // d/dx (x * x) = 2x
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::new(vec![2], vec![3.0, -1.5]).unwrap());
        let y = tape.mul(x, x).unwrap();
        let s = tape.sum(y);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[6.0, -3.0]);
    }

    #[test]
    fn visit_order_is_reverse_and_unique() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::full(&[3], 0.5));
        let y = tape.relu(x);
        let z = tape.scale(y, 2.0);
        let s = tape.sum(z);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.visit_order(), &[3, 2, 1, 0]);
    }

    #[test]
    fn precisions_share_the_same_graph() {
        let x = Tensor::new(vec![1, 3], vec![0.5, -1.25, 2.0]).unwrap();
        let w = Tensor::new(vec![3, 2], vec![0.1, -0.2, 0.3, 0.4, -0.5, 0.6]).unwrap();
        let grad_of = |xs: &[f64]| -> Vec<f64> {
            let mut tape = TapeOf::<f64>::new();
            let xv = tape.leaf(TensorOf::new(vec![1, 3], xs.to_vec()).unwrap());
            let wv = tape.leaf(w.cast());
            let bv = tape.leaf(TensorOf::zeros(&[2]));
            let h = tape.linear(xv, wv, bv).unwrap();
            let loss = tape.softmax_cross_entropy(h, &[1]).unwrap();
            tape.backward(loss).unwrap().get(xv).unwrap().data().to_vec()
        };
        let g64 = grad_of(&[0.5, -1.25, 2.0]);
        let mut tape = Tape::new();
        let xv = tape.leaf(x);
        let wv = tape.leaf(w);
        let bv = tape.leaf(Tensor::zeros(&[2]));
        let h = tape.linear(xv, wv, bv).unwrap();
        let loss = tape.softmax_cross_entropy(h, &[1]).unwrap();
        let g32 = tape.backward(loss).unwrap();
        for (a, b) in g32.get(xv).unwrap().data().iter().zip(&g64) {
            assert!((f64::from(*a) - b).abs() < 1e-6);
        }
    }
}
