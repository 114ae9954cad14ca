//! Float64 reference forward pass used as an independent oracle.

#![allow(dead_code)]

use oppnet::retinanet::NetworkParameters;

/// Parameters widened to f64, in the library's tensor order.
#[derive(Clone)]
pub struct Params64 {
    pub tensors: Vec<Vec<f64>>,
    pub conv_shapes: Vec<[usize; 4]>,
    pub hidden: (usize, usize),
    pub output: (usize, usize),
    pub size: usize,
}

impl Params64 {
    pub fn from(params: &NetworkParameters) -> Self {
        let tensors = params
            .tensors()
            .iter()
            .map(|t| t.data().iter().map(|&v| f64::from(v)).collect())
            .collect();
        let conv_shapes = params
            .conv
            .iter()
            .map(|l| {
                let s = l.weight.shape();
                [s[0], s[1], s[2], s[3]]
            })
            .collect();
        let h = params.hidden.weight.shape();
        let o = params.output.weight.shape();
        Params64 {
            tensors,
            conv_shapes,
            hidden: (h[0], h[1]),
            output: (o[0], o[1]),
            size: params.config.input_size,
        }
    }
}

/// Activations of one sample.
pub struct Trace {
    /// Pre-activations of every conv layer run, then of the hidden layer.
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
}

fn conv(x: &[f64], c_in: usize, s: usize, w: &[f64], b: &[f64], c_out: usize, k: usize) -> Vec<f64> {
    let p = k / 2;
    let mut out = vec![0.0; c_out * s * s];
    for o in 0..c_out {
        let plane = &mut out[o * s * s..(o + 1) * s * s];
        plane.iter_mut().for_each(|v| *v = b[o]);
        for i in 0..c_in {
            let src = &x[i * s * s..(i + 1) * s * s];
            for ky in 0..k {
                for kx in 0..k {
                    let wv = w[((o * c_in + i) * k + ky) * k + kx];
                    // output y reads input y + ky - p
                    let y0 = p.saturating_sub(ky);
                    let y1 = (s + p).saturating_sub(ky).min(s);
                    let x0 = p.saturating_sub(kx);
                    let x1 = (s + p).saturating_sub(kx).min(s);
                    for y in y0..y1 {
                        let sy = y + ky - p;
                        let row = &mut plane[y * s..(y + 1) * s];
                        let srow = &src[sy * s..(sy + 1) * s];
                        for xx in x0..x1 {
                            row[xx] += wv * srow[xx + kx - p];
                        }
                    }
                }
            }
        }
    }
    out
}

fn linear(x: &[f64], w: &[f64], b: &[f64], n_in: usize, n_out: usize) -> Vec<f64> {
    (0..n_out)
        .map(|j| b[j] + (0..n_in).map(|i| x[i] * w[i * n_out + j]).sum::<f64>())
        .collect()
}

/// Run one `[C, S, S]` sample. With `conv_layers = Some(n)` only the first
/// `n` conv layers run and no logits are produced.
pub fn run(p: &Params64, input: &[f64], conv_layers: Option<usize>) -> Trace {
    let s = p.size;
    let n = conv_layers.unwrap_or(p.conv_shapes.len());
    let mut x = input.to_vec();
    let mut pre = Vec::new();
    let mut post = Vec::new();
    for (l, sh) in p.conv_shapes.iter().enumerate().take(n) {
        let z = conv(&x, sh[1], s, &p.tensors[2 * l], &p.tensors[2 * l + 1], sh[0], sh[2]);
        x = z.iter().map(|v| v.max(0.0)).collect();
        pre.push(z);
        post.push(x.clone());
    }
    if conv_layers.is_some() {
        return Trace {
            pre,
            post,
            logits: Vec::new(),
        };
    }
    let base = 2 * p.conv_shapes.len();
    let h = linear(&x, &p.tensors[base], &p.tensors[base + 1], p.hidden.0, p.hidden.1);
    let hr: Vec<f64> = h.iter().map(|v| v.max(0.0)).collect();
    let logits = linear(&hr, &p.tensors[base + 2], &p.tensors[base + 3], p.output.0, p.output.1);
    pre.push(h);
    post.push(hr);
    Trace { pre, post, logits }
}

/// Mean softmax cross-entropy over a batch.
pub fn loss(p: &Params64, inputs: &[Vec<f64>], labels: &[usize]) -> (f64, Vec<Trace>) {
    let mut total = 0.0;
    let mut traces = Vec::with_capacity(inputs.len());
    for (x, &y) in inputs.iter().zip(labels) {
        let t = run(p, x, None);
        let m = t.logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + t.logits.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - t.logits[y];
        traces.push(t);
    }
    (total / inputs.len() as f64, traces)
}

/// True when any pre-activation changes sign (or leaves zero) between two traces.
pub fn relu_pattern_differs(a: &[Trace], b: &[Trace]) -> bool {
    a.iter().zip(b).any(|(ta, tb)| {
        ta.pre
            .iter()
            .zip(&tb.pre)
            .any(|(la, lb)| la.iter().zip(lb).any(|(x, y)| (*x > 0.0) != (*y > 0.0)))
    })
}

/// HSL to RGB by the two-anchor `p/q` construction.
pub fn hsl(h: f64, s: f64, l: f64) -> [f64; 3] {
    let q = if l < 0.5 { l * (1.0 + s) } else { l + s - l * s };
    let p = 2.0 * l - q;
    let h = h.rem_euclid(360.0) / 360.0;
    let channel = |t: f64| {
        let t = t.rem_euclid(1.0);
        if t < 1.0 / 6.0 {
            p + (q - p) * 6.0 * t
        } else if t < 0.5 {
            q
        } else if t < 2.0 / 3.0 {
            p + (q - p) * (2.0 / 3.0 - t) * 6.0
        } else {
            p
        }
    };
    [channel(h + 1.0 / 3.0), channel(h), channel(h - 1.0 / 3.0)]
}

/// Uniform `[3, S, S]` field of one hue at S = 1, L = 0.5.
pub fn hue_field(h: f64, size: usize) -> Vec<f64> {
    let rgb = hsl(h, 1.0, 0.5);
    (0..3 * size * size).map(|i| rgb[i / (size * size)]).collect()
}
