//! Forward and backward kernels for the primitives the tape records.
//!
//! Convolutions go through im2col and a single-threaded gemm, so loop
//! order (and therefore rounding) is fixed for a given shape.

use super::{Element, TensorOf};
use crate::error::{Error, Result};

/// `c = a · b + beta · c` for row-major operands, with optional transposes.
///
/// `a` is `m × k` (or `k × m` when `trans_a`), `b` is `k × n` (or `n × k`).
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm<T: Element>(
    m: usize,
    k: usize,
    n: usize,
    a: &[T],
    trans_a: bool,
    b: &[T],
    trans_b: bool,
    beta: T,
    c: &mut [T],
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let (rsa, csa) = if trans_a { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if trans_b { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the strides describe exactly the row-major buffers checked above.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            T::one(),
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[derive(Clone, Copy, Debug)]
struct ConvGeometry {
    batch: usize,
    c_in: usize,
    c_out: usize,
    height: usize,
    width: usize,
    kernel: usize,
}

impl ConvGeometry {
    fn new<T: Element>(input: &TensorOf<T>, weight: &TensorOf<T>, bias: &TensorOf<T>) -> Result<Self> {
        let &[batch, c_in, height, width] = input.shape() else {
            return Err(Error::Shape(format!(
                "conv2d input must be [N,C,H,W], got {:?}",
                input.shape()
            )));
        };
        let &[c_out, w_in, kh, kw] = weight.shape() else {
            return Err(Error::Shape(format!(
                "conv2d weights must be [C_out,C_in,k,k], got {:?}",
                weight.shape()
            )));
        };
        if w_in != c_in {
            return Err(Error::Shape(format!(
                "conv2d: input has {c_in} channels but weights expect {w_in}"
            )));
        }
        if kh != kw || kh % 2 == 0 {
            return Err(Error::Shape(format!(
                "conv2d kernel must be square and odd, got {kh}x{kw}"
            )));
        }
        if bias.shape() != [c_out] {
            return Err(Error::Shape(format!(
                "conv2d bias must be [{c_out}], got {:?}",
                bias.shape()
            )));
        }
        Ok(ConvGeometry {
            batch,
            c_in,
            c_out,
            height,
            width,
            kernel: kh,
        })
    }

    fn patch(&self) -> usize {
        self.c_in * self.kernel * self.kernel
    }

    fn plane(&self) -> usize {
        self.height * self.width
    }
}

/// Unfold one `[C,H,W]` sample into a `[C·k·k, H·W]` matrix (zero padded).
fn im2col<T: Element>(sample: &[T], g: &ConvGeometry, cols: &mut [T]) {
    let (h, w, k) = (g.height as isize, g.width as isize, g.kernel);
    let pad = (k / 2) as isize;
    let plane = g.plane();
    for c in 0..g.c_in {
        let src = &sample[c * plane..(c + 1) * plane];
        for ki in 0..k {
            for kj in 0..k {
                let row = (c * k + ki) * k + kj;
                let dst = &mut cols[row * plane..(row + 1) * plane];
                let dy = ki as isize - pad;
                let dx = kj as isize - pad;
                for y in 0..h {
                    let sy = y + dy;
                    let out_row = &mut dst[(y * w) as usize..((y + 1) * w) as usize];
                    if sy < 0 || sy >= h {
                        out_row.fill(T::zero());
                        continue;
                    }
                    let src_row = &src[(sy * w) as usize..((sy + 1) * w) as usize];
                    for x in 0..w {
                        let sx = x + dx;
                        out_row[x as usize] = if sx < 0 || sx >= w {
                            T::zero()
                        } else {
                            src_row[sx as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-add columns back into a `[C,H,W]` buffer.
fn col2im<T: Element>(cols: &[T], g: &ConvGeometry, sample: &mut [T]) {
    let (h, w, k) = (g.height as isize, g.width as isize, g.kernel);
    let pad = (k / 2) as isize;
    let plane = g.plane();
    for c in 0..g.c_in {
        let dst = &mut sample[c * plane..(c + 1) * plane];
        for ki in 0..k {
            for kj in 0..k {
                let row = (c * k + ki) * k + kj;
                let src = &cols[row * plane..(row + 1) * plane];
                let dy = ki as isize - pad;
                let dx = kj as isize - pad;
                for y in 0..h {
                    let sy = y + dy;
                    if sy < 0 || sy >= h {
                        continue;
                    }
                    for x in 0..w {
                        let sx = x + dx;
                        if sx >= 0 && sx < w {
                            dst[(sy * w + sx) as usize] += src[(y * w + x) as usize];
                        }
                    }
                }
            }
        }
    }
}

/// Stride-1 "same" cross-correlation with zero padding of `(k-1)/2`.
pub fn conv2d<T: Element>(input: &TensorOf<T>, weight: &TensorOf<T>, bias: &TensorOf<T>) -> Result<TensorOf<T>> {
    let g = ConvGeometry::new(input, weight, bias)?;
    let plane = g.plane();
    let patch = g.patch();
    let in_stride = g.c_in * plane;
    let out_stride = g.c_out * plane;
    let mut out = vec![T::zero(); g.batch * out_stride];
    let mut cols = vec![T::zero(); patch * plane];
    for n in 0..g.batch {
        let dst = &mut out[n * out_stride..(n + 1) * out_stride];
        for (co, row) in dst.chunks_exact_mut(plane).enumerate() {
            row.fill(bias.data()[co]);
        }
        let sample = &input.data()[n * in_stride..(n + 1) * in_stride];
        if g.kernel == 1 {
            gemm(g.c_out, patch, plane, weight.data(), false, sample, false, T::one(), dst);
        } else {
            im2col(sample, &g, &mut cols);
            gemm(g.c_out, patch, plane, weight.data(), false, &cols, false, T::one(), dst);
        }
    }
    TensorOf::new(vec![g.batch, g.c_out, g.height, g.width], out)
}

pub struct ConvGrads<T: Element> {
    pub input: TensorOf<T>,
    pub weight: TensorOf<T>,
    pub bias: TensorOf<T>,
}

pub fn conv2d_backward<T: Element>(
    input: &TensorOf<T>,
    weight: &TensorOf<T>,
    bias: &TensorOf<T>,
    grad_out: &TensorOf<T>,
) -> Result<ConvGrads<T>> {
    let g = ConvGeometry::new(input, weight, bias)?;
    let plane = g.plane();
    let patch = g.patch();
    let in_stride = g.c_in * plane;
    let out_stride = g.c_out * plane;
    if grad_out.shape() != [g.batch, g.c_out, g.height, g.width] {
        return Err(Error::Shape(format!(
            "conv2d backward: gradient shape {:?} does not match output",
            grad_out.shape()
        )));
    }
    let mut d_input = vec![T::zero(); input.len()];
    let mut d_weight = vec![T::zero(); weight.len()];
    let mut d_bias = vec![T::zero(); g.c_out];
    let mut cols = vec![T::zero(); patch * plane];
    let mut d_cols = vec![T::zero(); patch * plane];
    for n in 0..g.batch {
        let sample = &input.data()[n * in_stride..(n + 1) * in_stride];
        let dy = &grad_out.data()[n * out_stride..(n + 1) * out_stride];
        for (co, row) in dy.chunks_exact(plane).enumerate() {
            d_bias[co] += row.iter().copied().sum::<T>();
        }
        let dx = &mut d_input[n * in_stride..(n + 1) * in_stride];
        if g.kernel == 1 {
            gemm(g.c_out, plane, patch, dy, false, sample, true, T::one(), &mut d_weight);
            gemm(patch, g.c_out, plane, weight.data(), true, dy, false, T::zero(), dx);
        } else {
            im2col(sample, &g, &mut cols);
            gemm(g.c_out, plane, patch, dy, false, &cols, true, T::one(), &mut d_weight);
            gemm(patch, g.c_out, plane, weight.data(), true, dy, false, T::zero(), &mut d_cols);
            col2im(&d_cols, &g, dx);
        }
    }
    Ok(ConvGrads {
        input: TensorOf::new(input.shape().to_vec(), d_input)?,
        weight: TensorOf::new(weight.shape().to_vec(), d_weight)?,
        bias: TensorOf::new(vec![g.c_out], d_bias)?,
    })
}

fn linear_dims<T: Element>(x: &TensorOf<T>, weight: &TensorOf<T>, bias: &TensorOf<T>) -> Result<(usize, usize, usize)> {
    let (&[n, f], &[wf, g]) = (x.shape(), weight.shape()) else {
        return Err(Error::Shape(format!(
            "linear expects x [N,F] and W [F,G], got {:?} and {:?}",
            x.shape(),
            weight.shape()
        )));
    };
    if f != wf {
        return Err(Error::Shape(format!(
            "linear: inner dimensions disagree ({f} vs {wf})"
        )));
    }
    if bias.shape() != [g] {
        return Err(Error::Shape(format!(
            "linear bias must be [{g}], got {:?}",
            bias.shape()
        )));
    }
    Ok((n, f, g))
}

/// Affine map `x · W + b`.
pub fn linear<T: Element>(x: &TensorOf<T>, weight: &TensorOf<T>, bias: &TensorOf<T>) -> Result<TensorOf<T>> {
    let (n, f, g) = linear_dims(x, weight, bias)?;
    let mut out = Vec::with_capacity(n * g);
    for _ in 0..n {
        out.extend_from_slice(bias.data());
    }
    gemm(n, f, g, x.data(), false, weight.data(), false, T::one(), &mut out);
    TensorOf::new(vec![n, g], out)
}

pub struct LinearGrads<T: Element> {
    pub x: TensorOf<T>,
    pub weight: TensorOf<T>,
    pub bias: TensorOf<T>,
}

pub fn linear_backward<T: Element>(
    x: &TensorOf<T>,
    weight: &TensorOf<T>,
    bias: &TensorOf<T>,
    grad_out: &TensorOf<T>,
) -> Result<LinearGrads<T>> {
    let (n, f, g) = linear_dims(x, weight, bias)?;
    if grad_out.shape() != [n, g] {
        return Err(Error::Shape(format!(
            "linear backward: gradient shape {:?}, expected [{n}, {g}]",
            grad_out.shape()
        )));
    }
    let mut dx = vec![T::zero(); n * f];
    let mut dw = vec![T::zero(); f * g];
    let mut db = vec![T::zero(); g];
    gemm(n, g, f, grad_out.data(), false, weight.data(), true, T::zero(), &mut dx);
    gemm(f, n, g, x.data(), true, grad_out.data(), false, T::zero(), &mut dw);
    for row in grad_out.data().chunks_exact(g) {
        for (acc, &v) in db.iter_mut().zip(row) {
            *acc += v;
        }
    }
    Ok(LinearGrads {
        x: TensorOf::new(vec![n, f], dx)?,
        weight: TensorOf::new(vec![f, g], dw)?,
        bias: TensorOf::new(vec![g], db)?,
    })
}

pub fn relu<T: Element>(x: &TensorOf<T>) -> TensorOf<T> {
    x.map(|v| v.max(T::zero()))
}

/// Gradient of ReLU; the derivative at exactly zero is taken to be zero.
pub fn relu_backward<T: Element>(x: &TensorOf<T>, grad_out: &TensorOf<T>) -> TensorOf<T> {
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&v, &g)| if v > T::zero() { g } else { T::zero() })
        .collect();
    TensorOf::new(x.shape().to_vec(), data).expect("relu gradient shape")
}

/// Row-wise softmax probabilities and the mean cross-entropy loss.
pub fn softmax_cross_entropy<T: Element>(logits: &TensorOf<T>, targets: &[usize]) -> Result<(T, TensorOf<T>)> {
    let &[n, k] = logits.shape() else {
        return Err(Error::Shape(format!(
            "softmax_cross_entropy expects [N,K] logits, got {:?}",
            logits.shape()
        )));
    };
    if targets.len() != n {
        return Err(Error::Shape(format!(
            "{} targets for a batch of {n}",
            targets.len()
        )));
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= k) {
        return Err(Error::InvalidArgument(format!(
            "target class {bad} out of range for {k} classes"
        )));
    }
    let mut probs = vec![T::zero(); n * k];
    let mut total = 0.0f64;
    for ((row, out), &t) in logits
        .data()
        .chunks_exact(k)
        .zip(probs.chunks_exact_mut(k))
        .zip(targets)
    {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut denom = T::zero();
        for (p, &z) in out.iter_mut().zip(row) {
            *p = (z - max).exp();
            denom += *p;
        }
        for p in out.iter_mut() {
            *p /= denom;
        }
        total += (denom.ln() - (row[t] - max)).into_f64();
    }
    let loss = T::of_f64(total / n as f64);
    Ok((loss, TensorOf::new(vec![n, k], probs)?))
}
